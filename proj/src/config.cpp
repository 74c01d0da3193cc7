#include "penlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "penlab/hash.hpp"

namespace penlab {

namespace {

std::string join(const std::vector<std::string>& items, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += items[i];
    }
    return out;
}

struct ReactionTerms {
    double linear = 0.0;
    double positive_part = 0.0;
    double power = 0.0;
};

ReactionTerms parse_reaction(const std::string& text, std::vector<std::string>* errors)
{
    ReactionTerms r;
    if (text == "zero" || text.empty()) {
        return r;
    }
    std::stringstream ss(text);
    std::string term;
    while (std::getline(ss, term, '+')) {
        const auto colon = term.find(':');
        const std::string name = term.substr(0, colon);
        double value = 0.0;
        bool ok = colon != std::string::npos;
        if (ok) {
            try {
                std::size_t used = 0;
                value = std::stod(term.substr(colon + 1), &used);
                ok = used == term.size() - colon - 1 && std::isfinite(value);
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok || (name != "linear" && name != "pospart" && name != "power")) {
            if (errors) {
                errors->push_back("model.reaction: cannot parse term '" + term +
                                  "' (expected zero, linear:a, pospart:b or power:c)");
            }
            continue;
        }
        if (name == "linear") {
            r.linear += value;
        } else if (name == "pospart") {
            r.positive_part += value;
        } else {
            r.power += value;
        }
    }
    return r;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid configuration: " + join(errors, "; ")), errors_(std::move(errors))
{
}

std::string penalty_kind_name(PenaltyKind k)
{
    return k == PenaltyKind::Linear ? "linear" : "power";
}

ExperimentConfig standard_scenario()
{
    return ExperimentConfig{};
}

Grid ExperimentConfig::grid() const
{
    return Grid::build(dim, Vec2{extent, dim == 2 ? extent_y : extent}, nx, dim == 2 ? ny : 1, T, nt);
}

ReactionModel ExperimentConfig::reaction_model(double strength) const
{
    const ReactionTerms t = parse_reaction(reaction, nullptr);
    ReactionModel r;
    r.linear = t.linear;
    r.positive_part = t.positive_part;
    r.power_coef = t.power;
    r.penalty_kind = penalty;
    r.exponent = penalty_exponent > 0.0 ? penalty_exponent : p;
    r.n = strength;
    return r;
}

FluxModel ExperimentConfig::flux_model() const
{
    Convection c;
    c.amplitude = convection;
    return FluxModel(dim, p, eps_reg, c);
}

NoiseSpec ExperimentConfig::noise_spec() const
{
    NoiseSpec s;
    s.modes = modes;
    s.decay = gamma;
    s.amp = amp;
    return s;
}

Field ExperimentConfig::initial_field(const Grid& g) const
{
    return initial_profile(profile, g, profile_scale);
}

SolverConfig ExperimentConfig::solver_config(double strength) const
{
    const Grid g = grid();
    SolverConfig c{g, flux_model(), reaction_model(strength), noise_spec(), initial_field(g)};
    c.newton_tol = newton_tol;
    c.newton_max_iters = newton_max_iters;
    return c;
}

CapacityProblem ExperimentConfig::capacity_problem() const
{
    const Grid g = Grid::build(cap_dim, Vec2{cap_extent, cap_extent}, cap_nx, cap_dim == 2 ? cap_nx : 1, cap_T, cap_nt);
    CapacityProblem prob(g, CellSet::parse(g, cap_cells));
    prob.max_iters = cap_max_iters;
    return prob;
}

Field initial_profile(const std::string& name, const Grid& g, double scale)
{
    const double pi = std::numbers::pi;
    const Vec2 L = g.extent();
    const int d = g.dim();
    std::function<double(const Vec2&)> fn;
    if (name == "sine-bump") {
        fn = [&](const Vec2& x) {
            double v = std::sin(pi * x[0] / L[0]);
            if (d == 2) {
                v *= std::sin(pi * x[1] / L[1]);
            }
            return v;
        };
    } else if (name == "plateau") {
        fn = [&](const Vec2& x) {
            double dist = std::min(x[0] / L[0], 1.0 - x[0] / L[0]);
            if (d == 2) {
                dist = std::min({dist, x[1] / L[1], 1.0 - x[1] / L[1]});
            }
            return std::min(1.0, 4.0 * dist);
        };
    } else if (name == "two-bump") {
        fn = [&](const Vec2& x) {
            double v = std::abs(std::sin(2.0 * pi * x[0] / L[0]));
            if (d == 2) {
                v *= std::sin(pi * x[1] / L[1]);
            }
            return v;
        };
    } else {
        throw std::invalid_argument("unknown initial profile '" + name + "' (sine-bump, plateau, two-bump)");
    }
    Field f = Field::from_function(g, fn);
    for (double& v : f.values()) {
        v = std::max(0.0, scale * v);
    }
    return f;
}

std::vector<std::string> ExperimentConfig::problems() const
{
    std::vector<std::string> e;
    if (dim != 1 && dim != 2) {
        e.push_back("grid.dim must be 1 or 2");
    }
    if (!(extent > 0.0) || (dim == 2 && !(extent_y > 0.0))) {
        e.push_back("grid.extent must be positive");
    }
    if (nx < 2) {
        e.push_back("grid.nx too small (need nx >= 2)");
    }
    if (dim == 2 && ny < 2) {
        e.push_back("grid.ny too small (need ny >= 2)");
    }
    if (!(T > 0.0)) {
        e.push_back("grid.T must be positive");
    }
    if (nt < 1) {
        e.push_back("grid.nt must be >= 1");
    }
    const int d = dim == 2 ? 2 : 1;
    const double p_min = 2.0 * d / (d + 1.0);
    if (!(p > p_min)) {
        std::ostringstream os;
        os << "model.p=" << p << " is not above 2d/(d+1)=" << p_min;
        e.push_back(os.str());
    }
    if (!std::isfinite(convection)) {
        e.push_back("model.convection must be finite");
    }
    parse_reaction(reaction, &e);
    if (!(eps_reg >= 0.0)) {
        e.push_back("model.eps_reg must be >= 0");
    }
    if (!(n >= 0.0)) {
        e.push_back("model.n must be >= 0");
    }
    if (penalty_exponent != 0.0 && !(penalty_exponent > 1.0)) {
        e.push_back("model.penalty_exponent must exceed 1 (or be 0 to use p)");
    }
    if (modes < 1) {
        e.push_back("noise.modes must be >= 1");
    }
    if (!(gamma > 1.0)) {
        std::ostringstream os;
        os << "noise.gamma=" << gamma << ": trace-class violation (need gamma > 1)";
        e.push_back(os.str());
    }
    if (!(amp >= 0.0) || !std::isfinite(amp)) {
        e.push_back("noise.amp must be finite and >= 0");
    }
    if (sweep.empty()) {
        e.push_back("sweep.n must list at least one value");
    }
    for (double v : sweep) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            e.push_back("sweep.n values must be finite and >= 0");
            break;
        }
    }
    if (num_paths < 1) {
        e.push_back("ensemble.num_paths must be >= 1");
    }
    if (profile != "sine-bump" && profile != "plateau" && profile != "two-bump") {
        e.push_back("initial.profile '" + profile + "' is unknown (sine-bump, plateau, two-bump)");
    }
    if (!(profile_scale >= 0.0)) {
        e.push_back("initial.scale must be >= 0 (u0 >= 0)");
    }
    if (!(newton_tol > 0.0)) {
        e.push_back("solver.newton_tol must be positive");
    }
    if (newton_max_iters < 1) {
        e.push_back("solver.newton_max_iters must be >= 1");
    }
    if (cap_dim != 1 && cap_dim != 2) {
        e.push_back("capacity.dim must be 1 or 2");
    }
    if (cap_nx < 2 || cap_nx > 32 || cap_nt < 1 || cap_nt > 32) {
        e.push_back("capacity grid must have 2 <= nx <= 32 and 1 <= nt <= 32");
    }
    if (!(cap_T > 0.0) || !(cap_extent > 0.0)) {
        e.push_back("capacity.T and capacity.extent must be positive");
    }
    if (cap_max_iters < 1) {
        e.push_back("capacity.max_iters must be >= 1");
    }
    if (e.empty()) {
        try {
            (void)capacity_problem();
        } catch (const std::exception& ex) {
            e.push_back(std::string("capacity.cells: ") + ex.what());
        }
    }
    return e;
}

std::string ExperimentConfig::canonical() const
{
    std::ostringstream os;
    os << "grid.dim=" << dim << "\ngrid.extent=" << fmt_exact(extent) << "\n";
    if (dim == 2) {
        os << "grid.extent_y=" << fmt_exact(extent_y) << "\ngrid.ny=" << ny << "\n";
    }
    os << "grid.nx=" << nx << "\ngrid.T=" << fmt_exact(T) << "\ngrid.nt=" << nt << "\n";
    const ReactionModel r = reaction_model(n);
    os << "model.p=" << fmt_exact(p) << "\nmodel.convection=" << fmt_exact(convection)
       << "\nmodel.reaction=linear:" << fmt_exact(r.linear) << "+pospart:" << fmt_exact(r.positive_part)
       << "+power:" << fmt_exact(r.power_coef) << "\nmodel.penalty=" << penalty_kind_name(penalty);
    if (penalty == PenaltyKind::Power) {
        os << "\nmodel.penalty_exponent=" << fmt_exact(r.exponent);
    }
    os << "\nmodel.eps_reg=" << fmt_exact(eps_reg)
       << "\nmodel.n=" << fmt_exact(n) << "\n";
    os << "noise.modes=" << modes << "\nnoise.gamma=" << fmt_exact(gamma) << "\nnoise.amp=" << fmt_exact(amp)
       << "\nnoise.seed=" << seed << "\n";
    os << "sweep.n=";
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        os << (i ? "," : "") << fmt_exact(sweep[i]);
    }
    os << "\nensemble.num_paths=" << num_paths << "\nensemble.base_seed=" << base_seed << "\n";
    os << "initial.profile=" << profile << "\ninitial.scale=" << fmt_exact(profile_scale) << "\n";
    os << "solver.newton_tol=" << fmt_exact(newton_tol) << "\nsolver.newton_max_iters=" << newton_max_iters << "\n";
    os << "capacity.dim=" << cap_dim << "\ncapacity.nx=" << cap_nx << "\ncapacity.nt=" << cap_nt
       << "\ncapacity.T=" << fmt_exact(cap_T) << "\ncapacity.extent=" << fmt_exact(cap_extent);
    // cells are canonicalized through the parsed mask so formatting differences do not matter
    std::string mask;
    try {
        const CapacityProblem prob = capacity_problem();
        for (char c : prob.set.mask()) {
            mask += c ? '1' : '0';
        }
    } catch (const std::exception&) {
        mask = cap_cells;
    }
    os << "\ncapacity.cells=" << fnv1a_hex(mask) << "\ncapacity.max_iters=" << cap_max_iters << "\n";
    return os.str();
}

std::string ExperimentConfig::fingerprint() const
{
    return fnv1a_hex(canonical());
}

// Parsing -------------------------------------------------------------------

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

template <class T>
T parse_number(const std::string& key, const std::string& raw)
{
    std::istringstream is(raw);
    T v{};
    is >> v;
    std::string rest;
    if (is.fail() || (is >> rest)) {
        throw std::invalid_argument(key + ": cannot parse '" + raw + "' as a number");
    }
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw)
{
    std::vector<double> out;
    std::string text = raw;
    for (char& c : text) {
        if (c == ',') {
            c = ' ';
        }
    }
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        out.push_back(parse_number<double>(key, tok));
    }
    return out;
}

const std::map<std::string, std::map<std::string, Setter>>& setters()
{
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"scenario", {{"name", [](ExperimentConfig& c, const std::string& v) { c.scenario = v; }}}},
        {"grid",
         {
             {"dim", [](ExperimentConfig& c, const std::string& v) { c.dim = parse_number<int>("grid.dim", v); }},
             {"extent", [](ExperimentConfig& c, const std::string& v) { c.extent = parse_number<double>("grid.extent", v); }},
             {"extent_y",
              [](ExperimentConfig& c, const std::string& v) { c.extent_y = parse_number<double>("grid.extent_y", v); }},
             {"nx", [](ExperimentConfig& c, const std::string& v) { c.nx = parse_number<int>("grid.nx", v); }},
             {"ny", [](ExperimentConfig& c, const std::string& v) { c.ny = parse_number<int>("grid.ny", v); }},
             {"T", [](ExperimentConfig& c, const std::string& v) { c.T = parse_number<double>("grid.T", v); }},
             {"nt", [](ExperimentConfig& c, const std::string& v) { c.nt = parse_number<int>("grid.nt", v); }},
         }},
        {"model",
         {
             {"p", [](ExperimentConfig& c, const std::string& v) { c.p = parse_number<double>("model.p", v); }},
             {"convection",
              [](ExperimentConfig& c, const std::string& v) { c.convection = parse_number<double>("model.convection", v); }},
             {"reaction", [](ExperimentConfig& c, const std::string& v) { c.reaction = v; }},
             {"penalty",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "linear") {
                      c.penalty = PenaltyKind::Linear;
                  } else if (v == "power") {
                      c.penalty = PenaltyKind::Power;
                  } else {
                      throw std::invalid_argument("model.penalty must be linear or power, got '" + v + "'");
                  }
              }},
             {"penalty_exponent",
              [](ExperimentConfig& c, const std::string& v) {
                  c.penalty_exponent = parse_number<double>("model.penalty_exponent", v);
              }},
             {"eps_reg", [](ExperimentConfig& c, const std::string& v) { c.eps_reg = parse_number<double>("model.eps_reg", v); }},
             {"n", [](ExperimentConfig& c, const std::string& v) { c.n = parse_number<double>("model.n", v); }},
         }},
        {"noise",
         {
             {"modes", [](ExperimentConfig& c, const std::string& v) { c.modes = parse_number<int>("noise.modes", v); }},
             {"gamma", [](ExperimentConfig& c, const std::string& v) { c.gamma = parse_number<double>("noise.gamma", v); }},
             {"amp", [](ExperimentConfig& c, const std::string& v) { c.amp = parse_number<double>("noise.amp", v); }},
             {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("noise.seed", v); }},
         }},
        {"sweep", {{"n", [](ExperimentConfig& c, const std::string& v) { c.sweep = parse_list("sweep.n", v); }}}},
        {"ensemble",
         {
             {"num_paths",
              [](ExperimentConfig& c, const std::string& v) { c.num_paths = parse_number<int>("ensemble.num_paths", v); }},
             {"base_seed",
              [](ExperimentConfig& c, const std::string& v) {
                  c.base_seed = parse_number<std::uint64_t>("ensemble.base_seed", v);
              }},
         }},
        {"initial",
         {
             {"profile", [](ExperimentConfig& c, const std::string& v) { c.profile = v; }},
             {"scale",
              [](ExperimentConfig& c, const std::string& v) { c.profile_scale = parse_number<double>("initial.scale", v); }},
         }},
        {"solver",
         {
             {"newton_tol",
              [](ExperimentConfig& c, const std::string& v) { c.newton_tol = parse_number<double>("solver.newton_tol", v); }},
             {"newton_max_iters",
              [](ExperimentConfig& c, const std::string& v) {
                  c.newton_max_iters = parse_number<int>("solver.newton_max_iters", v);
              }},
         }},
        {"capacity",
         {
             {"dim", [](ExperimentConfig& c, const std::string& v) { c.cap_dim = parse_number<int>("capacity.dim", v); }},
             {"nx", [](ExperimentConfig& c, const std::string& v) { c.cap_nx = parse_number<int>("capacity.nx", v); }},
             {"nt", [](ExperimentConfig& c, const std::string& v) { c.cap_nt = parse_number<int>("capacity.nt", v); }},
             {"T", [](ExperimentConfig& c, const std::string& v) { c.cap_T = parse_number<double>("capacity.T", v); }},
             {"extent",
              [](ExperimentConfig& c, const std::string& v) { c.cap_extent = parse_number<double>("capacity.extent", v); }},
             {"cells", [](ExperimentConfig& c, const std::string& v) { c.cap_cells = v; }},
             {"max_iters",
              [](ExperimentConfig& c, const std::string& v) {
                  c.cap_max_iters = parse_number<int>("capacity.max_iters", v);
              }},
         }},
        {"output", {{"dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }}}},
    };
    return table;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& ex) {
        throw ConfigError({std::string("syntax: ") + ex.message() + " (line " + std::to_string(ex.line()) + ")"});
    }
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        const auto sec = table.find(section);
        if (sec == table.end()) {
            if (body.empty()) {
                errors.push_back("key '" + section + "' outside any section");
            } else {
                errors.push_back("unknown section [" + section + "]");
            }
            continue;
        }
        for (const auto& [key, value] : body) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) {
                errors.push_back("unknown key " + section + "." + key);
                continue;
            }
            try {
                it->second(cfg, value.data());
            } catch (const std::exception& ex) {
                errors.push_back(ex.what());
            }
        }
    }
    for (auto& p : cfg.problems()) {
        errors.push_back(std::move(p));
    }
    if (!errors.empty()) {
        throw ConfigError(std::move(errors));
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open config file '" + path + "'"});
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace penlab
