#include "thinlim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

namespace thinlim {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

double toDouble(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

int toInt(const std::string& key, const std::string& v) {
    const double d = toDouble(key, v);
    if (d != static_cast<int>(d)) throw ConfigError("key '" + key + "': expected an integer");
    return static_cast<int>(d);
}

/// One section: keys are consumed as they are read, leftovers are reported.
class Section {
public:
    Section(std::string name, const pt::ptree* tree) : name_(std::move(name)) {
        if (!tree) return;
        for (const auto& kv : *tree) values_[kv.first] = kv.second.data();
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        std::string v = it->second;
        values_.erase(it);
        return v;
    }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string require(const std::string& key) {
        auto v = take(key);
        if (!v) throw ConfigError("section [" + name_ + "] is missing key '" + key + "'");
        return *v;
    }
    /// Remaining keys starting with `base.`, i.e. registered derivatives.
    std::vector<std::pair<std::string, std::string>> takeDerivatives(const std::string& base) {
        std::vector<std::pair<std::string, std::string>> out;
        const std::string prefix = base + ".";
        for (auto it = values_.begin(); it != values_.end();) {
            if (it->first.rfind(prefix, 0) == 0) {
                out.emplace_back(it->first.substr(prefix.size()), it->second);
                it = values_.erase(it);
            } else {
                ++it;
            }
        }
        return out;
    }
    void finish() const {
        if (!values_.empty())
            throw ConfigError("section [" + name_ + "] has unknown key '" + values_.begin()->first + "'");
    }

private:
    std::string name_;
    std::map<std::string, std::string> values_;
};

int varIndex(const std::string& token, int dim, const std::string& key) {
    if (token == "y") return dim;
    if (token.size() > 1 && token[0] == 'x') {
        const int k = toInt(key, token.substr(1));
        if (k >= 1 && k <= dim) return k - 1;
    }
    throw ConfigError("key '" + key + "': bad derivative variable '" + token + "'");
}

ScalarFunction parseFunction(const std::string& key, const std::string& text, int dim) {
    try {
        return ScalarFunction::parse(text, dim);
    } catch (const SyntaxError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    } catch (const UnknownIdentifier& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

/// Read `key` as an expression (default `fallback`) plus derivative keys such
/// as `key.dx1` and `key.dx1dx2`.
ScalarFunction readFunction(Section& sec, const std::string& key, int dim,
                            const std::optional<std::string>& fallback = "0") {
    auto text = sec.take(key);
    if (!text && !fallback) text = sec.require(key);
    ScalarFunction f = parseFunction(key, text ? *text : *fallback, dim);
    static const std::regex pattern("^d(x[0-9]+|y)(?:d(x[0-9]+|y))?$");
    for (const auto& [suffix, expr] : sec.takeDerivatives(key)) {
        std::smatch m;
        if (!std::regex_match(suffix, m, pattern))
            throw ConfigError("key '" + key + "." + suffix + "': unrecognized derivative suffix");
        const int i = varIndex(m[1].str(), dim, key);
        ScalarFunction d = parseFunction(key + "." + suffix, expr, dim);
        if (m[2].matched)
            f = f.withSecond(i, varIndex(m[2].str(), dim, key), d);
        else
            f = f.withFirst(i, d);
    }
    return f;
}

Vec readVector(Section& sec, const std::string& key, int dim) {
    const auto parts = words(sec.require(key));
    if (static_cast<int>(parts.size()) != dim)
        throw ConfigError("key '" + key + "' needs " + std::to_string(dim) + " numbers");
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = toDouble(key, parts[i]);
    return v;
}

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
    auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
}

}  // namespace

ProblemConfig parseConfig(const std::string& text) {
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    std::set<std::string> known{"problem", "geometry", "controls", "boundary", "solver", "experiment"};

    Section prob("problem", child(root, "problem"));
    const int n = toInt("dimension", prob.require("dimension"));
    if (n < 1 || n > 2) throw ConfigError("dimension must be 1 or 2");
    CoefficientFamily family;
    family.k = toInt("k", prob.take("k").value_or(std::to_string(n + 1)));
    if (family.k < 1) throw ConfigError("k must be positive");
    GeometrySpec geom;
    geom.dim = n;
    geom.epsilon0 = toDouble("epsilon0", prob.require("epsilon0"));
    if (auto v = prob.take("bound_cf")) family.boundCF = toDouble("bound_cf", *v);
    prob.finish();

    Section geo("geometry", child(root, "geometry"));
    geom.omega.lower = readVector(geo, "lower", n);
    geom.omega.upper = readVector(geo, "upper", n);
    for (int i = 0; i < n; ++i)
        if (!(geom.omega.lower[i] < geom.omega.upper[i])) throw ConfigError("empty domain box");
    geom.gMinus = readFunction(geo, "g_minus", n, std::nullopt);
    geom.gPlus = readFunction(geo, "g_plus", n, std::nullopt);
    geo.finish();

    Section ctl("controls", child(root, "controls"));
    ControlSet controls;
    controls.lambdas = words(ctl.take("lambda").value_or("0"));
    controls.mus = words(ctl.take("mu").value_or("0"));
    ctl.finish();

    for (const auto& l : controls.lambdas) {
        for (const auto& m : controls.mus) {
            const std::string name = "coefficients." + l + "." + m;
            known.insert(name);
            const pt::ptree* tree = child(root, name);
            if (!tree) throw ConfigError("missing section [" + name + "]");
            Section sec(name, tree);
            ControlCoefficients cc;
            cc.sigma.assign(family.k, VectorFunction(n + 1));
            for (int i = 0; i < family.k; ++i)
                for (int j = 0; j <= n; ++j)
                    cc.sigma[i][j] = readFunction(sec, "sigma_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), n);
            cc.b.resize(n + 1);
            for (int i = 0; i <= n; ++i) cc.b[i] = readFunction(sec, "b_" + std::to_string(i + 1), n);
            cc.c = readFunction(sec, "c", n);
            cc.f = readFunction(sec, "f", n);
            sec.finish();
            family.entries.push_back(std::move(cc));
        }
    }

    Section bnd("boundary", child(root, "boundary"));
    BoundaryData bd;
    auto readN = [&](const std::string& base, int count) {
        VectorFunction v;
        for (int i = 0; i < count; ++i) v.push_back(readFunction(bnd, base + "_" + std::to_string(i + 1), n));
        return v;
    };
    bd.gamma0 = readN("gamma0", n);
    bd.beta0 = readFunction(bnd, "beta0", n);
    bd.kPlus = readN("kplus", n);
    bd.kMinus = readN("kminus", n);
    bd.lPlus = readFunction(bnd, "lplus", n);
    bd.lMinus = readFunction(bnd, "lminus", n);
    bd.betaLateral = readFunction(bnd, "beta", n);
    bd.s = readFunction(bnd, "s", n, std::nullopt);
    if (bnd.has("h")) bd.h = readFunction(bnd, "h", n);
    // Raw oblique data: supplying any component switches off synthesis for that side.
    auto rawVector = [&](const std::string& base) -> std::optional<VectorFunction> {
        bool any = false;
        for (int i = 0; i <= n; ++i) any = any || bnd.has(base + "_" + std::to_string(i + 1));
        if (!any) return std::nullopt;
        return readN(base, n + 1);
    };
    bd.gammaPlusRaw = rawVector("gamma_plus");
    bd.gammaMinusRaw = rawVector("gamma_minus");
    if (bnd.has("beta_plus")) bd.betaPlusRaw = readFunction(bnd, "beta_plus", n);
    if (bnd.has("beta_minus")) bd.betaMinusRaw = readFunction(bnd, "beta_minus", n);
    bnd.finish();

    ProblemConfig cfg;
    cfg.problem = ThinProblem(std::move(controls), std::move(family), std::move(geom), std::move(bd));

    Section sol("solver", child(root, "solver"));
    if (auto v = sol.take("nx")) cfg.solver.nx = toInt("nx", *v);
    if (auto v = sol.take("ny")) cfg.solver.ny = toInt("ny", *v);
    if (auto v = sol.take("tol")) cfg.solver.tol = toDouble("tol", *v);
    if (auto v = sol.take("max_iter")) cfg.solver.maxIter = toInt("max_iter", *v);
    if (auto v = sol.take("gauss_seidel")) cfg.solver.gaussSeidel = (*v == "true" || *v == "1");
    sol.finish();

    Section exp("experiment", child(root, "experiment"));
    if (auto v = exp.take("eps")) {
        cfg.experiment.eps.clear();
        for (const auto& w : words(*v)) cfg.experiment.eps.push_back(toDouble("eps", w));
    }
    if (auto v = exp.take("nx")) cfg.experiment.nx = toInt("nx", *v);
    if (auto v = exp.take("ny")) {
        cfg.experiment.ny.clear();
        for (const auto& w : words(*v)) cfg.experiment.ny.push_back(toInt("ny", w));
    }
    if (auto v = exp.take("seed")) cfg.experiment.seed = static_cast<unsigned long>(toInt("seed", *v));
    exp.finish();

    for (const auto& kv : root)
        if (!known.count(kv.first)) throw ConfigError("unknown section [" + kv.first + "]");
    return cfg;
}

ProblemConfig loadConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parseConfig(buf.str());
}

}  // namespace thinlim
