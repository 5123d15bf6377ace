#include "rothe/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

namespace rothe {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in) {
    ConfigFile file;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto comment = line.find_first_of("#;");
        const std::string text = trim(comment == std::string::npos ? line : line.substr(0, comment));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw config_error("", fmt::format("line {}: malformed section header", number));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw config_error("", fmt::format("line {}: expected 'key = value'", number));
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw config_error("", fmt::format("line {}: empty key", number));
        if (value.empty()) throw config_error(key, fmt::format("line {}: key '{}' has no value", number, key));
        if (!file.values_.emplace(key, value).second) {
            throw config_error(key, fmt::format("line {}: duplicate key '{}'", number, key));
        }
    }
    return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("", fmt::format("cannot read config file '{}'", path.string()));
    return parse(in);
}

const std::string& ConfigFile::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw config_error(key, fmt::format("missing required key '{}'", key));
    return it->second;
}

std::string to_string(Preset preset) {
    switch (preset) {
        case Preset::ou_linear: return "ou_linear";
        case Preset::heat_1d_additive: return "heat_1d_additive";
        case Preset::heat_1d_multiplicative: return "heat_1d_multiplicative";
        case Preset::energy_norm_rho_half: return "energy_norm_rho_half";
    }
    return "unknown";
}

std::string to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "jsonl"; }

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "preset", "T", "J", "K_list", "K", "lambda", "noise_scale", "u0", "g", "h", "rho", "sigma", "beta", "alpha",
        "delta", "solver", "direction", "theta", "max_iter", "tolerance_rule", "tolerance_constant", "samples", "seed",
        "reference", "K_ref", "probe_paths", "probes", "output_dir", "format", "two_level_J", "threads"};
    return keys;
}

class Reader {
public:
    explicit Reader(const ConfigFile& file) : file_(file) {}

    double real(const std::string& key) const {
        const std::string& text = file_.get(key);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() || !std::isfinite(x)) {
            throw config_error(key, fmt::format("key '{}': '{}' is not a real number", key, text));
        }
        return x;
    }
    double real(const std::string& key, double fallback) const { return file_.has(key) ? real(key) : fallback; }

    std::uint64_t count(const std::string& key) const {
        const std::string& text = file_.get(key);
        if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
            throw config_error(key, fmt::format("key '{}': '{}' is not a nonnegative integer", key, text));
        }
        try {
            return std::stoull(text);
        } catch (const std::exception&) {
            throw config_error(key, fmt::format("key '{}': '{}' is out of range", key, text));
        }
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) const { return file_.has(key) ? count(key) : fallback; }

    std::string text(const std::string& key, const std::string& fallback) const { return file_.has(key) ? file_.get(key) : fallback; }

    bool flag(const std::string& key, bool fallback) const {
        if (!file_.has(key)) return fallback;
        const auto& t = file_.get(key);
        if (t == "true" || t == "1" || t == "yes") return true;
        if (t == "false" || t == "0" || t == "no") return false;
        throw config_error(key, fmt::format("key '{}': '{}' is not a boolean", key, t));
    }

    std::vector<std::size_t> counts(const std::string& key) const {
        const std::string& t = file_.get(key);
        std::vector<std::size_t> out;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
                throw config_error(key, fmt::format("key '{}': '{}' is not a list of positive integers", key, t));
            }
            out.push_back(static_cast<std::size_t>(std::stoull(item)));
            if (out.back() == 0) throw config_error(key, fmt::format("key '{}': entries must be >= 1", key));
        }
        if (out.empty()) throw config_error(key, fmt::format("key '{}' is empty", key));
        return out;
    }

    template <typename Fn>
    auto parsed(const std::string& key, Fn&& fn) const {
        try {
            return fn(file_.get(key));
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            throw config_error(key, fmt::format("key '{}': {}", key, e.what()));
        }
    }

private:
    const ConfigFile& file_;
};

Preset parse_preset(const std::string& text) {
    for (Preset p : {Preset::ou_linear, Preset::heat_1d_additive, Preset::heat_1d_multiplicative, Preset::energy_norm_rho_half}) {
        if (to_string(p) == text) return p;
    }
    throw config_error("preset", fmt::format("key 'preset': unknown preset '{}'", text));
}

std::optional<OutputFormat> parse_format(const std::string& text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "jsonl" || text == "json-lines") return OutputFormat::jsonl;
    return std::nullopt;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const ConfigFile& file) {
    for (const auto& [key, value] : file.values()) {
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw config_error(key, fmt::format("unknown key '{}'", key));
        }
    }
    const Reader read(file);
    ExperimentConfig cfg;
    cfg.preset = parse_preset(file.get("preset"));
    const bool ou = cfg.preset == Preset::ou_linear;

    auto& s = cfg.scheme;
    s.T = read.real("T");
    cfg.k_list = read.counts("K_list");
    s.J = static_cast<std::size_t>(ou ? read.count("J", 1) : read.count("J"));
    const bool rho_half = cfg.preset == Preset::energy_norm_rho_half;
    s.rho = read.real("rho", rho_half ? 0.5 : 0.0);
    s.sigma = read.real("sigma", rho_half ? 0.5 : 0.0);
    s.beta = read.real("beta", 0.0);
    s.alpha = read.real("alpha", 0.55);
    s.delta = read.real("delta", 0.8 * max_rate(s.sigma, s.beta, s.alpha));
    s.samples = static_cast<std::size_t>(read.count("samples", 100));
    s.seed = read.count("seed", 0);
    s.K = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());

    s.solver = file.has("solver") ? read.parsed("solver", [](const std::string& t) { return SolverChoice::parse(t); })
                                  : SolverChoice::exact();
    if (file.has("direction")) {
        const auto& d = file.get("direction");
        if (d == "highest_mode") s.solver.direction = SolverChoice::Direction::highest_mode;
        else if (d == "random") s.solver.direction = SolverChoice::Direction::random_unit;
        else throw config_error("direction", fmt::format("key 'direction': unknown value '{}'", d));
    }
    if (file.has("theta")) {
        const auto& t = file.get("theta");
        if (t == "saturated") s.solver.theta = SolverChoice::Theta::saturated;
        else if (t == "uniform") s.solver.theta = SolverChoice::Theta::uniform;
        else throw config_error("theta", fmt::format("key 'theta': unknown value '{}'", t));
    }
    s.solver.max_iter = static_cast<unsigned>(read.count("max_iter", s.solver.max_iter));
    s.solver.seed = s.seed;
    s.tolerance = file.has("tolerance_rule")
                      ? read.parsed("tolerance_rule", [](const std::string& t) { return ToleranceRule::parse(t); })
                      : ToleranceRule::theorem41();
    if (file.has("tolerance_constant")) {
        if (s.tolerance.kind != ToleranceRule::Kind::theorem41) {
            throw config_error("tolerance_constant", "key 'tolerance_constant' only applies to tolerance_rule = theorem41");
        }
        s.tolerance.value = read.real("tolerance_constant");
    }

    cfg.lambda = read.real("lambda", -1.0);
    cfg.noise_scale = read.real("noise_scale", 1.0);
    cfg.u0_amplitude = read.real("u0", 0.0);
    if (file.has("g")) {
        cfg.g = read.parsed("g", [](const std::string& t) { return ScalarMap::parse(t); });
    } else if (!ou) {
        cfg.g = ScalarMap::sine(1.0);
    }
    cfg.h = file.has("h") ? read.parsed("h", [](const std::string& t) { return ScalarMap::parse(t); })
                          : (cfg.preset == Preset::heat_1d_multiplicative ? ScalarMap::affine(0.5, 1.0)
                             : rho_half                                   ? ScalarMap::affine(0.5, 0.0)
                                                                          : ScalarMap::constant(1.0));

    const std::size_t max_k = s.K;
    const std::string reference = read.text("reference", ou ? "ou_oracle" : "fine_euler");
    if (reference == "ou_oracle") {
        cfg.reference = ReferenceChoice::ou_oracle();
    } else if (reference == "fine_euler") {
        cfg.reference = ReferenceChoice::fine_euler(static_cast<std::size_t>(read.count("K_ref", 64 * max_k)));
    } else {
        throw config_error("reference", fmt::format("key 'reference': unknown value '{}'", reference));
    }
    cfg.propagation_steps = static_cast<std::size_t>(read.count("K", max_k));
    if (cfg.propagation_steps == 0) throw config_error("K", "key 'K' must be >= 1");
    cfg.probe_paths = static_cast<std::size_t>(read.count("probe_paths", 2));
    cfg.probes = static_cast<std::size_t>(read.count("probes", 32));
    cfg.output_dir = read.text("output_dir", "out");
    const auto fmt_text = read.text("format", "csv");
    const auto format = parse_format(fmt_text);
    if (!format) throw config_error("format", fmt::format("key 'format': unknown value '{}'", fmt_text));
    cfg.format = *format;
    cfg.two_level_j = read.flag("two_level_J", false);
    cfg.threads = static_cast<std::size_t>(read.count("threads", 0));
    return cfg;
}

Model ExperimentConfig::build_model(std::size_t modes) const {
    if (preset == Preset::ou_linear) {
        auto op = SpectralOperator({lambda}, SpectrumKind::power_law, "ou_linear", 2.0);
        NoiseSpec noise;
        noise.cm_coeffs = {noise_scale};
        noise.beta_target = scheme.beta;
        return Model::make(std::move(op), g, std::move(noise));
    }
    auto op = make_dirichlet_laplacian_1d(modes);
    NoiseSpec noise = preset == Preset::heat_1d_additive
                          ? make_additive_noise(op, scheme.rho, scheme.beta, scheme.alpha, noise_scale)
                          : make_multiplicative_noise(op, h, scheme.rho, scheme.beta, scheme.alpha, noise_scale);
    return Model::make(std::move(op), g, std::move(noise));
}

SpectralVector ExperimentConfig::initial_state(std::size_t modes) const {
    auto u0 = SpectralVector::zeros(modes);
    u0[0] = u0_amplitude;
    return u0;
}

std::vector<ValidationIssue> validate_experiment(const ExperimentConfig& cfg) {
    std::vector<ValidationIssue> issues;
    const auto& s = cfg.scheme;
    auto issue = [&](std::string key, std::string message) { issues.push_back({std::move(key), std::move(message)}); };

    if (!(s.T > 0.0)) issue("T", fmt::format("T = {} must be positive", s.T));
    if (s.samples < 1) issue("samples", "samples must be >= 1");

    switch (cfg.preset) {
        case Preset::ou_linear:
            if (s.J != 1) issue("J", "ou_linear is a single mode: J must be 1");
            if (!(cfg.lambda < 0.0)) issue("lambda", fmt::format("lambda = {} must be negative", cfg.lambda));
            if (cfg.g && !cfg.g->is_zero()) issue("g", "ou_linear has no drift nonlinearity (g = zero)");
            break;
        case Preset::heat_1d_additive: break;
        case Preset::heat_1d_multiplicative:
            if (s.rho != 0.0) issue("rho", "heat_1d_multiplicative requires rho = 0");
            if (s.sigma != 0.0) issue("sigma", "heat_1d_multiplicative requires sigma = 0");
            if (s.beta != 0.0) issue("beta", "heat_1d_multiplicative requires beta = 0");
            if (!(s.alpha > 0.5 && s.alpha < 1.0)) issue("alpha", "heat_1d_multiplicative requires 1/2 < alpha < 1");
            break;
        case Preset::energy_norm_rho_half:
            if (s.rho != 0.5) issue("rho", "energy_norm_rho_half requires rho = 1/2");
            if (s.sigma != 0.5) issue("sigma", "energy_norm_rho_half requires sigma = 1/2");
            if (!(s.beta >= 0.0 && s.beta < 0.25)) issue("beta", "energy_norm_rho_half requires 0 <= beta < 1/4");
            if (!(s.alpha > 0.5 && s.alpha < 1.0 - 2.0 * s.beta)) {
                issue("alpha", "energy_norm_rho_half requires 1/2 < alpha < 1 - 2 beta");
            }
            if (cfg.h.kind() != ScalarMap::Kind::affine || (!cfg.h.is_constant() && cfg.h(0.0) != 0.0)) {
                issue("h", "energy_norm_rho_half requires h linear or constant");
            }
            break;
    }
    if (cfg.preset != Preset::ou_linear && s.J < 1) issue("J", "J must be >= 1");

    // Parameter conditions; the operator only matters for the trace condition.
    const auto op = cfg.preset == Preset::ou_linear || s.J < 1 ? make_power_law_operator(1, 1.0, 2.0)
                                                               : make_dirichlet_laplacian_1d(s.J);
    const auto report = check_assumptions(op, s.alpha, s.sigma, s.beta, s.rho);
    for (const auto& c : report.conditions) {
        if (!c.passed) issue(c.name == "trace" ? "alpha" : c.name, c.detail);
    }
    if (!(s.delta > 0.0 && s.delta < report.delta_max)) {
        issue("delta", fmt::format("delta = {} must lie in (0, delta_max) with delta_max = {}", s.delta, report.delta_max));
    }

    if (cfg.reference.kind == ReferenceChoice::Kind::ou_oracle) {
        const bool linear = (!cfg.g || cfg.g->is_zero()) &&
                            (cfg.preset == Preset::ou_linear || cfg.preset == Preset::heat_1d_additive);
        if (!linear) issue("reference", "ou_oracle needs a linear additive model (g = zero, additive noise)");
    } else {
        const std::size_t max_k = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());
        if (cfg.reference.fine_steps <= max_k) issue("K_ref", "K_ref must exceed every K in K_list");
        for (std::size_t K : cfg.k_list) {
            if (cfg.reference.fine_steps % K != 0) issue("K_ref", fmt::format("K = {} does not divide K_ref", K));
        }
    }
    if (s.solver.kind == SolverChoice::Kind::iterative && s.tolerance.kind == ToleranceRule::Kind::constant &&
        s.tolerance.value == 0.0) {
        issue("tolerance_rule", "the iterative solver needs positive tolerances");
    }
    if (s.tolerance.kind == ToleranceRule::Kind::custom && cfg.k_list.size() != 1) {
        issue("tolerance_rule", "a custom schedule needs a single entry in K_list");
    }
    for (double e : s.tolerance.schedule) {
        if (!(e >= 0.0)) issue("tolerance_rule", "tolerances must be nonnegative");
    }
    if (s.tolerance.kind != ToleranceRule::Kind::custom && !(s.tolerance.value >= 0.0)) {
        issue("tolerance_rule", "tolerances must be nonnegative");
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Output

namespace {

using Field = std::variant<std::monostate, std::string, double, std::size_t>;
using Row = std::vector<std::pair<std::string, Field>>;

std::string csv_field(const Field& f) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return {};
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (v.find_first_of(",\"\n") == std::string::npos) return v;
                std::string quoted = "\"";
                for (char c : v) {
                    if (c == '"') quoted += '"';
                    quoted += c;
                }
                return quoted + "\"";
            } else if constexpr (std::is_same_v<T, double>) {
                return fmt::format("{:.17g}", v);
            } else {
                return fmt::format("{}", v);
            }
        },
        f);
}

nlohmann::ordered_json json_field(const Field& f) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return nullptr;
                return v;
            } else {
                return v;
            }
        },
        f);
}

void write_rows(std::ostream& out, OutputFormat format, const std::vector<Row>& rows) {
    if (rows.empty()) return;
    if (format == OutputFormat::csv) {
        std::vector<std::string> header;
        for (const auto& [name, value] : rows.front()) header.push_back(name);
        out << fmt::format("{}\n", fmt::join(header, ","));
        for (const auto& row : rows) {
            std::vector<std::string> cells;
            for (const auto& [name, value] : row) cells.push_back(csv_field(value));
            out << fmt::format("{}\n", fmt::join(cells, ","));
        }
        return;
    }
    for (const auto& row : rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (const auto& [name, value] : row) obj[name] = json_field(value);
        out << obj.dump() << '\n';
    }
}

Field opt(const std::optional<double>& v) { return v ? Field{*v} : Field{}; }

Row error_row(std::string type, std::size_t J, const ErrorTable& t, Field K, Field tau, Field rms, Field stderr_,
              Field samples, Field failures, Field rate, Field halfwidth, std::string provenance) {
    return Row{{"row_type", std::move(type)},
               {"J", J},
               {"K", std::move(K)},
               {"tau", std::move(tau)},
               {"rms_error", std::move(rms)},
               {"mc_stderr", std::move(stderr_)},
               {"samples", std::move(samples)},
               {"failures", std::move(failures)},
               {"solver", t.solver},
               {"epsilon_rule", t.epsilon_rule},
               {"reference", t.reference},
               {"norm_index", t.norm_index},
               {"fitted_rate", std::move(rate)},
               {"rate_halfwidth", std::move(halfwidth)},
               {"provenance", std::move(provenance)}};
}

}  // namespace

void write_error_tables(std::ostream& out, OutputFormat format, const std::vector<std::pair<std::size_t, ErrorTable>>& tables) {
    std::vector<Row> rows;
    for (const auto& [J, t] : tables) {
        for (const auto& r : t.rows) {
            rows.push_back(error_row("estimate", J, t, r.K, r.tau, r.rms_error, opt(r.mc_stderr), r.samples, r.failures, {}, {},
                                     "mc_estimate"));
        }
        for (const auto& r : t.rows) {
            if (r.oracle_rms) {
                rows.push_back(error_row("oracle", J, t, r.K, r.tau, *r.oracle_rms, {}, {}, {}, {}, {}, "exact_oracle"));
            }
        }
        rows.push_back(error_row("fit_window", J, t, {}, {}, {}, {}, {}, {}, t.fitted_rate.rate, opt(t.fitted_rate.halfwidth),
                                 "least_squares_fit"));
        rows.push_back(error_row("fit_full", J, t, {}, {}, {}, {}, {}, {}, t.full_fit.rate, opt(t.full_fit.halfwidth),
                                 "least_squares_fit"));
    }
    // Truncation check: |rms(J) - rms(2J)| per K when two levels are present.
    if (tables.size() == 2) {
        const auto& [j1, t1] = tables[0];
        const auto& [j2, t2] = tables[1];
        for (std::size_t i = 0; i < t1.rows.size() && i < t2.rows.size(); ++i) {
            const auto& a = t1.rows[i];
            const auto& b = t2.rows[i];
            rows.push_back(error_row("truncation_difference", j2, t2, a.K, a.tau, std::abs(a.rms_error - b.rms_error), {}, {}, {},
                                     {}, {}, fmt::format("two_level_difference(J={},J={})", j1, j2)));
        }
    }
    write_rows(out, format, rows);
}

void write_gap_table(std::ostream& out, OutputFormat format, const GapTable& table) {
    std::vector<Row> rows;
    for (const auto& r : table.rows) {
        rows.push_back(Row{{"k", r.k},
                           {"t", r.t},
                           {"epsilon_k", r.epsilon},
                           {"gap_rms", r.gap_rms},
                           {"gap_stderr", opt(r.gap_stderr)},
                           {"budget", r.budget},
                           {"within_budget", std::string(r.within_budget ? "true" : "false")},
                           {"samples", table.samples},
                           {"failures", table.failures},
                           {"solver", table.solver},
                           {"epsilon_rule", table.epsilon_rule},
                           {"norm_index", table.norm_index},
                           {"provenance", std::string("epsilon_k=schedule;gap=mc_estimate;budget=probe_lower_bound_lipschitz")}});
    }
    write_rows(out, format, rows);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Loaded {
    ExperimentConfig cfg;
};

std::optional<Loaded> load(const CommandOptions& options, std::ostream& err, int& exit_code) {
    try {
        Loaded loaded{ExperimentConfig::from_file(ConfigFile::load(options.config))};
        auto& cfg = loaded.cfg;
        if (const char* env = std::getenv("SEED_OVERRIDE"); env != nullptr && *env != '\0') {
            try {
                std::size_t used = 0;
                cfg.scheme.seed = std::stoull(env, &used);
                if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw config_error("SEED_OVERRIDE", fmt::format("SEED_OVERRIDE = '{}' is not an unsigned integer", env));
            }
        }
        if (options.seed) cfg.scheme.seed = *options.seed;
        cfg.scheme.solver.seed = cfg.scheme.seed;
        if (options.samples) cfg.scheme.samples = *options.samples;
        if (options.output_dir) cfg.output_dir = *options.output_dir;
        if (options.format) cfg.format = *options.format;
        return loaded;
    } catch (const config_error& e) {
        fmt::print(err, "config error{}: {}\n", e.key().empty() ? "" : fmt::format(" [{}]", e.key()), e.what());
        exit_code = 2;
        return std::nullopt;
    }
}

bool report_issues(const ExperimentConfig& cfg, std::ostream& err) {
    const auto issues = validate_experiment(cfg);
    for (const auto& i : issues) fmt::print(err, "invalid [{}]: {}\n", i.key, i.message);
    return issues.empty();
}

std::filesystem::path output_file(const ExperimentConfig& cfg, const std::string& stem) {
    return cfg.output_dir / (stem + (cfg.format == OutputFormat::csv ? ".csv" : ".jsonl"));
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    writer(out);
}

}  // namespace

int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    int code = 0;
    auto loaded = load(options, err, code);
    if (!loaded) return code;
    const auto& cfg = loaded->cfg;
    const auto& s = cfg.scheme;

    const auto op = cfg.preset == Preset::ou_linear ? make_power_law_operator(1, 1.0, 2.0) : make_dirichlet_laplacian_1d(s.J);
    const auto report = check_assumptions(op, s.alpha, s.sigma, s.beta, s.rho);
    fmt::print(out, "preset {} (J = {}, rho = {}, sigma = {}, beta = {}, alpha = {})\n", to_string(cfg.preset), s.J, s.rho,
               s.sigma, s.beta, s.alpha);
    for (const auto& c : report.conditions) fmt::print(out, "{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    fmt::print(out, "delta_max = {:.17g}\n", report.delta_max);
    fmt::print(out, "intermediate space index rho - max(0, sigma, beta + alpha/2) = {:.17g}\n", report.intermediate_space_index);

    const auto issues = validate_experiment(cfg);
    for (const auto& i : issues) {
        if (!report.find(i.key) || report.find(i.key)->passed) fmt::print(out, "FAIL {}: {}\n", i.key, i.message);
    }
    const bool ok = issues.empty() && report.all_passed();
    fmt::print(out, "{}\n", ok ? "all checks passed" : "some checks failed");
    return ok ? 0 : 1;
}

int cmd_convergence(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    int code = 0;
    auto loaded = load(options, err, code);
    if (!loaded) return code;
    const auto& cfg = loaded->cfg;
    if (!report_issues(cfg, err)) return 1;

    try {
        std::vector<std::size_t> levels{cfg.scheme.J};
        if (cfg.two_level_j && cfg.preset != Preset::ou_linear) levels.push_back(2 * cfg.scheme.J);

        const Pipeline pipelines[] = {{SolverChoice::exact(), cfg.scheme.tolerance}, {cfg.scheme.solver, cfg.scheme.tolerance}};
        StudyOptions study;
        study.threads = cfg.threads;

        std::vector<std::pair<std::size_t, ErrorTable>> exact_tables;
        std::vector<std::pair<std::size_t, ErrorTable>> inexact_tables;
        for (std::size_t J : levels) {
            SchemeConfig scheme = cfg.scheme;
            scheme.J = J;
            const auto model = cfg.build_model(J);
            auto tables = estimate_strong_errors(model, scheme, cfg.k_list, cfg.reference, pipelines, cfg.initial_state(J), study);
            for (const auto& t : tables) {
                for (const auto& r : t.rows) {
                    if (r.failures * 100 > cfg.scheme.samples) {
                        fmt::print(err, "run aborted: {} of {} samples failed for solver {} at K = {}\n", r.failures,
                                   cfg.scheme.samples, t.solver, r.K);
                        return 1;
                    }
                }
            }
            exact_tables.emplace_back(J, std::move(tables[0]));
            inexact_tables.emplace_back(J, std::move(tables[1]));
        }

        const auto exact_path = output_file(cfg, "convergence_exact");
        const auto inexact_path = output_file(cfg, "convergence_inexact");
        write_file(exact_path, [&](std::ostream& o) { write_error_tables(o, cfg.format, exact_tables); });
        write_file(inexact_path, [&](std::ostream& o) { write_error_tables(o, cfg.format, inexact_tables); });

        for (std::size_t i = 0; i < levels.size(); ++i) {
            const auto& e = exact_tables[i].second;
            const auto& n = inexact_tables[i].second;
            fmt::print(out, "J = {}: exact rate {:.4f}, inexact ({}, {}) rate {:.4f}, delta = {:.4f}\n", levels[i],
                       e.fitted_rate.rate, n.solver, n.epsilon_rule, n.fitted_rate.rate, cfg.scheme.delta);
            if (n.audit.violations > 0) {
                fmt::print(out, "warning: {} of {} inexact steps exceeded their tolerance\n", n.audit.violations, n.audit.records);
            }
        }
        fmt::print(out, "wrote {} and {}\n", exact_path.string(), inexact_path.string());
    } catch (const std::exception& e) {
        fmt::print(err, "run failed: {}\n", e.what());
        return 1;
    }
    return 0;
}

int cmd_propagation(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    int code = 0;
    auto loaded = load(options, err, code);
    if (!loaded) return code;
    const auto& cfg = loaded->cfg;
    if (!report_issues(cfg, err)) return 1;

    try {
        SchemeConfig scheme = cfg.scheme.with_steps(cfg.propagation_steps);
        if (scheme.tolerance.kind == ToleranceRule::Kind::custom && scheme.tolerance.schedule.size() != scheme.K) {
            fmt::print(err, "invalid [tolerance_rule]: custom schedule needs K = {} entries\n", scheme.K);
            return 1;
        }
        const auto model = cfg.build_model(scheme.J);
        PropagationOptions popts;
        popts.probe_paths = cfg.probe_paths;
        popts.probes = cfg.probes;
        popts.study.threads = cfg.threads;
        const auto table = propagation_gap(model, scheme, cfg.initial_state(scheme.J), popts);
        if (table.failures * 100 > scheme.samples) {
            fmt::print(err, "run aborted: {} of {} samples failed\n", table.failures, scheme.samples);
            return 1;
        }
        const auto path = output_file(cfg, "propagation");
        write_file(path, [&](std::ostream& o) { write_gap_table(o, cfg.format, table); });
        fmt::print(out, "K = {}: gap within budget at {} of {} steps (max L^ = {:.6g})\n", scheme.K,
                   std::count_if(table.rows.begin(), table.rows.end(), [](const GapRow& r) { return r.within_budget; }),
                   table.rows.size(), table.lipschitz.max());
        fmt::print(out, "wrote {}\n", path.string());
    } catch (const std::exception& e) {
        fmt::print(err, "run failed: {}\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace rothe
