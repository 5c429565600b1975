#include "twoscale/config.hpp"

#include "twoscale/bem.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/io.hpp"
#include "twoscale/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace twoscale {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used == v.size()) return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected on or off, got '" + v + "'");
}

void require(bool ok, const std::string& key, const std::string& range) {
  if (!ok) throw ConfigError(key + ": value out of range, expected " + range);
}

std::string step_name(const char* stem, int step, const char* ext) {
  std::ostringstream os;
  os << stem << '_' << std::setw(2) << std::setfill('0') << step << ext;
  return os.str();
}

/// Writes to the console stream up to a verbosity and always to the log file.
class RunLog {
 public:
  RunLog(std::ostream& console, int verbosity, const std::filesystem::path& file)
      : console_(console), verbosity_(verbosity), file_(file) {}
  void line(int level, const std::string& text) {
    if (level <= verbosity_) console_ << text << '\n' << std::flush;
    if (file_) file_ << text << '\n' << std::flush;
  }

 private:
  std::ostream& console_;
  int verbosity_;
  std::ofstream file_;
};

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  return f;
}

}  // namespace

void RunConfig::validate() const {
  require(scenario == "carrier" || scenario == "cantilever" || scenario == "bridge" || scenario == "lshape",
          "scenario", "carrier, cantilever, bridge or lshape");
  if (initial_level) require(*initial_level >= 1 && *initial_level <= 10, "initial_level", "1 .. 10");
  require(steps >= 1 && steps <= 40, "steps", "1 .. 40");
  require(fraction > 0.0 && fraction <= 1.0, "fraction", "(0, 1]");
  require(laminate_rounds >= 0 && laminate_rounds <= 10000, "laminate_rounds", "0 .. 10000");
  require(cell_resolution >= 16 && cell_resolution <= 1024 && cell_resolution % 2 == 0, "cell_resolution",
          "an even number in 16 .. 1024");
  require(cell_model == "table" || cell_model == "direct", "cell_model", "table or direct");
  require(optimizer_iterations >= 0 && optimizer_iterations <= 100000, "optimizer_iterations", "0 .. 100000");
  require(optimizer_tolerance > 0.0 && optimizer_tolerance < 1.0, "optimizer_tolerance", "(0, 1)");
  require(!output.empty(), "output", "a nonempty path");
  if (load_width) require(*load_width > 0.0 && *load_width <= 0.25, "load_width", "(0, 0.25]");
  if (resume_step) require(*resume_step >= 0 && *resume_step <= steps, "resume_step", "0 .. steps");
  const Scenario sc = make_scenario();
  require(level() >= sc.root_level(), "initial_level", "at least the root level of the scenario");
}

Scenario RunConfig::make_scenario() const { return Scenario::by_name(scenario, load_width.value_or(-1.0)); }

int RunConfig::level() const { return initial_level.value_or(make_scenario().initial_level); }

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "scenario") c.scenario = value;
  else if (key == "initial_level") c.initial_level = parse_int(key, value);
  else if (key == "steps") c.steps = parse_int(key, value);
  else if (key == "fraction") c.fraction = parse_double(key, value);
  else if (key == "laminate_rounds") c.laminate_rounds = parse_int(key, value);
  else if (key == "cell_resolution") c.cell_resolution = parse_int(key, value);
  else if (key == "cell_model") c.cell_model = value;
  else if (key == "optimizer_iterations") c.optimizer_iterations = parse_int(key, value);
  else if (key == "optimizer_tolerance") c.optimizer_tolerance = parse_double(key, value);
  else if (key == "output") c.output = value;
  else if (key == "bem_check") c.bem_check = parse_bool(key, value);
  else if (key == "load_width") c.load_width = parse_double(key, value);
  else if (key == "resume_step") c.resume_step = parse_int(key, value);
  else throw ConfigError(key + ": unknown key");
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment + ": expected key=value");
  set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    apply_override(c, line);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  return parse_config(f);
}

void write_config(std::ostream& os, const RunConfig& c) {
  os << "scenario = " << c.scenario << '\n';
  if (c.initial_level) os << "initial_level = " << *c.initial_level << '\n';
  os << "steps = " << c.steps << '\n'
     << "fraction = " << c.fraction << '\n'
     << "laminate_rounds = " << c.laminate_rounds << '\n'
     << "cell_resolution = " << c.cell_resolution << '\n'
     << "cell_model = " << c.cell_model << '\n'
     << "optimizer_iterations = " << c.optimizer_iterations << '\n'
     << "optimizer_tolerance = " << c.optimizer_tolerance << '\n'
     << "output = " << c.output << '\n'
     << "bem_check = " << (c.bem_check ? "on" : "off") << '\n';
  if (c.load_width) os << "load_width = " << *c.load_width << '\n';
  if (c.resume_step) os << "resume_step = " << *c.resume_step << '\n';
}

int run(const RunConfig& config, std::ostream& console, int verbosity) {
  try {
    config.validate();
  } catch (const ConfigError& e) {
    console << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  namespace fs = std::filesystem;
  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    console << "config error: output: cannot create " << dir.string() << ": " << ec.message() << '\n';
    return kExitConfig;
  }
  RunLog log(console, verbosity, dir / "run.log");
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  try {
    const Scenario scenario = config.make_scenario();
    {
      std::ofstream f = open_out(dir / "config.txt");
      write_config(f, config);
    }
    const CellMaterials materials{scenario.material};
    std::unique_ptr<CellModel> cells;
    if (config.cell_model == "table") {
      log.line(1, "building cell table at resolution " + std::to_string(config.cell_resolution));
      cells = std::make_unique<TabulatedCellModel>(materials, config.cell_resolution);
    } else {
      cells = std::make_unique<DirectCellModel>(materials, config.cell_resolution);
    }
    const CellModel& model = *cells;

    if (config.bem_check) {
      const ElasticTensor2D fem = model.aligned(0.5, 0.5);
      const ElasticTensor2D bem = bem::bem_effective_tensor(0.5, 0.5, materials.hard, 32);
      const Sym2 xi{1.0, 0.0, 0.0};
      const double ef = fem.energy(xi), eb = bem.energy(xi);
      std::ostringstream os;
      os << "cell cross-check at widths (0.5, 0.5): tabulated " << ef << ", boundary elements " << eb
         << ", relative difference " << std::abs(ef - eb) / eb;
      log.line(1, os.str());
    }

    AdaptiveOptions options;
    options.initial_level = config.level();
    options.rows = config.steps + 1;
    options.fraction = config.fraction;
    options.laminate_rounds = config.laminate_rounds;
    options.optimizer.max_iters = config.optimizer_iterations;
    options.optimizer.tol = config.optimizer_tolerance;

    std::vector<BreakdownRow> previous;
    if (config.resume_step) {
      const int s = *config.resume_step;
      std::ifstream csv = open_in(dir / "indicators.csv");
      previous = read_breakdown_csv(csv);
      if (static_cast<int>(previous.size()) < s)
        throw std::runtime_error("resume: indicators.csv holds fewer than " + std::to_string(s) + " rows");
      previous.resize(static_cast<std::size_t>(s));
      std::ifstream mesh_file = open_in(dir / step_name("mesh", s, ".txt"));
      std::ifstream design_file = open_in(dir / step_name("design", s, ".csv"));
      const auto records = read_mesh_dump(mesh_file);
      const auto rows = read_checkpoint(design_file);
      QuadMesh mesh = rebuild_mesh(scenario, options.initial_level, records);
      const auto params = match_checkpoint(mesh, records, rows);
      options.start = std::make_shared<const Discretization>(std::move(mesh), scenario);
      options.start_params = params;
      for (const auto& r : previous) {
        ErrorBreakdown b;
        b.edge = r.edge;
        b.volume = r.volume;
        b.model = r.model;
        b.total = r.total;
        b.compliance = r.compliance;
        b.elements = r.elements;
        options.history.push_back(b);
      }
      log.line(1, "resuming at step " + std::to_string(s) + " on " + std::to_string(params.size()) + " elements");
    }

    std::ofstream indicators = open_out(dir / "indicators.csv");
    write_breakdown_header(indicators);
    for (std::size_t i = 0; i < options.history.size(); ++i)
      write_breakdown_row(indicators, static_cast<int>(i), options.history[i]);
    indicators.flush();
    std::ofstream diagnostics = open_out(dir / "diagnostics.csv");
    diagnostics << "step,model_signed,patch_fallbacks,newton_failures,iterations,converged,line_search_failed,volume\n";

    options.on_step = [&](const AdaptiveStep& s) {
      const auto& b = s.breakdown;
      const auto& opt = s.optimization;
      write_breakdown_row(indicators, s.step, b);
      indicators.flush();
      diagnostics << std::setprecision(10) << s.step << ',' << b.model_signed << ',' << b.patch_fallbacks << ','
                  << b.newton_failures << ',' << opt.iterations << ',' << opt.converged << ','
                  << opt.line_search_failed << ',' << design_volume(*s.disc, opt.design.params) << '\n';
      diagnostics.flush();
      {
        std::ofstream f = open_out(dir / step_name("design", s.step, ".csv"));
        write_checkpoint(f, *s.disc, opt.design.params);
      }
      {
        std::ofstream f = open_out(dir / step_name("mesh", s.step, ".txt"));
        s.disc->mesh().dump(f);
      }
      {
        std::ofstream f = open_out(dir / step_name("field", s.step, ".vtk"));
        write_vtk(f, opt.u, opt.tensors, opt.design.params, &b);
      }
      if (opt.line_search_failed) log.line(1, "step " + std::to_string(s.step) + ": " + opt.message);
      std::ostringstream os;
      os << "step " << s.step << ": elements " << b.elements << ", compliance " << b.compliance << ", edge " << b.edge
         << ", volume " << b.volume << ", model " << b.model << ", total " << b.total << " (" << std::fixed
         << std::setprecision(1) << seconds() << " s)";
      log.line(1, os.str());
      std::ostringstream detail;
      detail << "  optimizer iterations " << opt.iterations << (opt.converged ? ", converged" : ", not converged")
             << "; patch fallbacks " << b.patch_fallbacks << ", laminate inversion fallbacks " << b.newton_failures;
      log.line(2, detail.str());
    };

    const AdaptiveResult result = adaptive_loop(scenario, model, options);

    std::ofstream summary = open_out(dir / "summary.txt");
    summary << "scenario " << scenario.name << '\n' << "rows " << result.rows.size() << '\n';
    summary << "turning_step " << result.turning_step << '\n';
    summary << "recommended_step " << result.recommended_step << '\n';
    summary << std::setprecision(10) << "recommended_compliance " << result.rows[result.recommended_step].compliance
            << '\n';
    std::ostringstream os;
    if (result.turning_step >= 0)
      os << "total estimator rises at step " << result.turning_step << "; stop at step " << result.recommended_step;
    else
      os << "total estimator decreased at every step; last step " << result.recommended_step;
    log.line(1, os.str());
    return kExitOk;
  } catch (const ConfigError& e) {
    log.line(0, std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log.line(0, std::string("solver failure: ") + e.what());
    return kExitSolver;
  }
}

}  // namespace twoscale
