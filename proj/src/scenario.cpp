#include "vpstab/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vpstab/error.hpp"

namespace vpstab {

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"run", {"seed", "out"}},
        {"initial", {"generator", "dim", "n", "mass", "radius", "velocity_spread", "stream_speed"}},
        {"kernel", {"kind", "sign", "softening"}},
        {"flow", {"dt", "t_end", "integrator", "record_every"}},
        {"twin", {"dx", "dv"}},
        {"orlicz", {"alpha", "h", "p_max"}},
        {"envelope", {"mode", "C", "c", "eps", "cprime"}},
        {"verify", {"density", "density_alpha", "r_min", "r_max", "separations", "directions", "slope_min",
                    "slope_max", "moment_c", "stability_tol", "rho_slope_tol", "h_min", "h_max"}},
        {"transport", {"cap", "sinkhorn_reg", "sinkhorn_iter", "sinkhorn_max_atoms", "subsample_seed"}},
    };
    return s;
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {
        std::istringstream is(text);
        try {
            pt::ini_parser::read_ini(is, tree_);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
        }
        std::istringstream lines(text);
        std::string line;
        for (int no = 1; std::getline(lines, line); ++no) {
            const auto a = line.find_first_not_of(" \t");
            if (a == std::string::npos || line[a] != '[') continue;
            const auto b = line.find(']', a);
            const std::string sec = b == std::string::npos ? "" : line.substr(a + 1, b - a - 1);
            if (!schema().count(sec))
                throw ConfigError("config line " + std::to_string(no) + ": unknown section [" + sec + "]");
        }
        for (const auto& [sec, body] : tree_) {
            const auto it = schema().find(sec);
            if (body.empty() && !body.data().empty())
                throw ConfigError("config line " + std::to_string(line_of("", sec)) + ": key '" + sec + "' outside any section");
            if (it == schema().end())
                throw ConfigError("config: unknown section [" + sec + "]");
            for (const auto& [key, _] : body) {
                if (!it->second.count(key))
                    throw ConfigError(where(sec, key) + ": unknown key");
            }
        }
    }

    bool has(const std::string& sec, const std::string& key) const {
        return static_cast<bool>(tree_.get_optional<std::string>(pt::ptree::path_type(sec + "/" + key, '/')));
    }

    std::string str(const std::string& sec, const std::string& key, const std::string& dflt) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(sec + "/" + key, '/'));
        return v ? *v : dflt;
    }

    double num(const std::string& sec, const std::string& key, double dflt) const {
        if (!has(sec, key)) return dflt;
        const std::string s = str(sec, key, "");
        if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(sec, key) + ": expected a number, got '" + s + "'");
        }
    }

    long long integer(const std::string& sec, const std::string& key, long long dflt) const {
        if (!has(sec, key)) return dflt;
        const std::string s = str(sec, key, "");
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(sec, key) + ": expected an integer, got '" + s + "'");
        }
    }

    std::uint64_t unsigned_int(const std::string& sec, const std::string& key) const {
        const std::string s = str(sec, key, "");
        try {
            std::size_t pos = 0;
            if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
            const unsigned long long v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(sec, key) + ": expected a nonnegative integer, got '" + s + "'");
        }
    }

    void require(bool ok, const std::string& sec, const std::string& key, const std::string& what) const {
        if (!ok) throw ConfigError(where(sec, key) + ": " + what);
    }

    std::string where(const std::string& sec, const std::string& key) const {
        const int line = line_of(sec, key);
        return sec + "." + key + (line > 0 ? " (line " + std::to_string(line) + ")" : "");
    }

private:
    // Line of `key` inside [sec] in the source text; 0 when absent.
    int line_of(const std::string& sec, const std::string& key) const {
        std::istringstream is(text_);
        std::string line, current;
        int no = 0;
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        while (std::getline(is, line)) {
            ++no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t.front() == '[' && t.back() == ']') {
                current = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq != std::string::npos && current == sec && trim(t.substr(0, eq)) == key) return no;
        }
        return 0;
    }

    const std::string& text_;
    pt::ptree tree_;
};

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::uint64_t* seed_override) {
    const Reader r(text);
    ScenarioConfig c;

    if (seed_override) {
        c.seed = *seed_override;
    } else {
        if (!r.has("run", "seed")) throw ConfigError("run.seed: missing (a seed is mandatory)");
        c.seed = r.unsigned_int("run", "seed");
    }
    c.out = r.str("run", "out", c.out);

    auto& in = c.initial;
    const std::string gen = r.str("initial", "generator", "uniform-disk");
    if (gen == "uniform-disk") {
        in.generator = Generator::UniformDisk;
    } else if (gen == "two-stream") {
        in.generator = Generator::TwoStream;
    } else if (gen == "gaussian-velocity") {
        in.generator = Generator::GaussianVelocity;
    } else {
        throw ConfigError(r.where("initial", "generator") + ": unknown generator '" + gen + "'");
    }
    in.dim = static_cast<int>(r.integer("initial", "dim", in.dim));
    r.require(in.dim == 2 || in.dim == 3, "initial", "dim", "must be 2 or 3");
    const long long n = r.integer("initial", "n", static_cast<long long>(in.n));
    r.require(n >= 1 && n <= 10000000, "initial", "n", "must lie in [1, 1e7]");
    in.n = static_cast<std::size_t>(n);
    in.mass = r.num("initial", "mass", in.mass);
    r.require(in.mass > 0.0 && std::isfinite(in.mass), "initial", "mass", "must be positive");
    in.radius = r.num("initial", "radius", in.radius);
    r.require(in.radius > 0.0 && std::isfinite(in.radius), "initial", "radius", "must be positive");
    in.velocity_spread = r.num("initial", "velocity_spread", in.velocity_spread);
    r.require(in.velocity_spread >= 0.0 && std::isfinite(in.velocity_spread), "initial", "velocity_spread", "must be >= 0");
    in.stream_speed = r.num("initial", "stream_speed", in.stream_speed);
    r.require(std::isfinite(in.stream_speed), "initial", "stream_speed", "must be finite");

    const std::string kind = r.str("kernel", "kind", "newton");
    if (kind == "newton") {
        c.kernel.kind = FieldKind::Newton;
    } else if (kind == "sin") {
        c.kernel.kind = FieldKind::Sin;
    } else if (kind == "free") {
        c.kernel.kind = FieldKind::Free;
    } else {
        throw ConfigError(r.where("kernel", "kind") + ": expected newton, sin or free");
    }
    c.kernel.sign = static_cast<int>(r.integer("kernel", "sign", c.kernel.sign));
    r.require(c.kernel.sign == 1 || c.kernel.sign == -1, "kernel", "sign", "must be +1 or -1");
    if (r.has("kernel", "softening") && r.str("kernel", "softening", "") != "auto") {
        c.kernel.softening = r.num("kernel", "softening", 0.0);
        r.require(c.kernel.softening >= 0.0 && std::isfinite(c.kernel.softening), "kernel", "softening",
                  "must be >= 0 or 'auto'");
    }

    c.flow.dt = r.num("flow", "dt", 1e-2);
    r.require(c.flow.dt > 0.0 && std::isfinite(c.flow.dt), "flow", "dt", "must be positive");
    c.flow.t_end = r.num("flow", "t_end", 1.0);
    r.require(c.flow.t_end >= 0.0 && std::isfinite(c.flow.t_end), "flow", "t_end", "must be >= 0");
    const std::string integ = r.str("flow", "integrator", "verlet");
    if (integ == "verlet") {
        c.flow.integrator = Integrator::VelocityVerlet;
    } else if (integ == "rk4") {
        c.flow.integrator = Integrator::RK4;
    } else {
        throw ConfigError(r.where("flow", "integrator") + ": expected verlet or rk4");
    }
    c.flow.record_every = static_cast<int>(r.integer("flow", "record_every", 1));
    r.require(c.flow.record_every >= 1, "flow", "record_every", "must be >= 1");

    c.twin.dx = r.num("twin", "dx", c.twin.dx);
    r.require(c.twin.dx >= 0.0 && std::isfinite(c.twin.dx), "twin", "dx", "must be >= 0");
    c.twin.dv = r.num("twin", "dv", c.twin.dv);
    r.require(c.twin.dv >= 0.0 && std::isfinite(c.twin.dv), "twin", "dv", "must be >= 0");

    const double alpha = r.num("orlicz", "alpha", 1.0);
    r.require(alpha >= 1.0, "orlicz", "alpha", "must lie in [1, inf]");
    c.idx = OrliczIndex::make(alpha);
    c.histogram_h = r.num("orlicz", "h", c.histogram_h);
    r.require(c.histogram_h > 0.0 && std::isfinite(c.histogram_h), "orlicz", "h", "must be positive");
    c.p_max = r.num("orlicz", "p_max", c.p_max);
    r.require(c.p_max >= (c.idx.is_infinite() ? 1.0 : alpha) && std::isfinite(c.p_max), "orlicz", "p_max",
              "must be finite and >= alpha");

    const std::string mode = r.str("envelope", "mode", "fit");
    r.require(mode == "fit" || mode == "fixed", "envelope", "mode", "expected fit or fixed");
    c.envelope.fit = mode == "fit";
    c.envelope.C = r.num("envelope", "C", c.envelope.C);
    r.require(c.envelope.C > 0.0, "envelope", "C", "must be positive");
    c.envelope.c = r.num("envelope", "c", c.envelope.c);
    r.require(c.envelope.c > 0.0, "envelope", "c", "must be positive");
    c.envelope.eps = r.num("envelope", "eps", c.envelope.eps);
    r.require(c.envelope.eps > 0.0, "envelope", "eps", "must be positive");
    c.envelope.cprime = r.num("envelope", "cprime", c.envelope.cprime);
    r.require(c.envelope.cprime > 0.0, "envelope", "cprime", "must be positive");

    auto& v = c.verify;
    v.density = r.str("verify", "density", v.density);
    r.require(v.density == "borderline" || v.density == "uniform-ball" || v.density == "gaussian-like", "verify",
              "density", "expected borderline, uniform-ball or gaussian-like");
    v.density_alpha = r.num("verify", "density_alpha", alpha);
    r.require(v.density_alpha >= 1.0, "verify", "density_alpha", "must lie in [1, inf]");
    v.r_min = r.num("verify", "r_min", v.r_min);
    v.r_max = r.num("verify", "r_max", v.r_max);
    r.require(v.r_min > 0.0 && v.r_max > v.r_min && v.r_max < 1.0 / 9.0, "verify", "r_max",
              "need 0 < r_min < r_max < 1/9");
    v.separations = static_cast<int>(r.integer("verify", "separations", v.separations));
    r.require(v.separations >= 2, "verify", "separations", "must be >= 2");
    v.directions = static_cast<int>(r.integer("verify", "directions", v.directions));
    r.require(v.directions >= 1, "verify", "directions", "must be >= 1");
    v.slope_min = r.num("verify", "slope_min", v.slope_min);
    v.slope_max = r.num("verify", "slope_max", v.slope_max);
    r.require(v.slope_max >= v.slope_min, "verify", "slope_max", "must be >= slope_min");
    v.moment_c = r.num("verify", "moment_c", v.moment_c);
    r.require(v.moment_c > 0.0, "verify", "moment_c", "must be positive");
    v.stability_tol = r.num("verify", "stability_tol", v.stability_tol);
    r.require(v.stability_tol > 0.0, "verify", "stability_tol", "must be positive");
    v.rho_slope_tol = r.num("verify", "rho_slope_tol", v.rho_slope_tol);
    v.h_min = r.num("verify", "h_min", v.h_min);
    v.h_max = r.num("verify", "h_max", v.h_max);
    r.require(v.h_min > 0.0 && v.h_max > v.h_min && v.h_max <= 1.0 / 9.0, "verify", "h_max",
              "need 0 < h_min < h_max <= 1/9");

    auto& t = c.transport;
    const long long cap = r.integer("transport", "cap", static_cast<long long>(t.cap));
    r.require(cap >= 2, "transport", "cap", "must be >= 2");
    t.cap = static_cast<std::size_t>(cap);
    t.sinkhorn_reg = r.num("transport", "sinkhorn_reg", t.sinkhorn_reg);
    r.require(t.sinkhorn_reg > 0.0, "transport", "sinkhorn_reg", "must be positive");
    t.sinkhorn_iter = static_cast<int>(r.integer("transport", "sinkhorn_iter", t.sinkhorn_iter));
    r.require(t.sinkhorn_iter >= 1, "transport", "sinkhorn_iter", "must be >= 1");
    const long long sma = r.integer("transport", "sinkhorn_max_atoms", static_cast<long long>(t.sinkhorn_max_atoms));
    r.require(sma >= 0, "transport", "sinkhorn_max_atoms", "must be >= 0");
    t.sinkhorn_max_atoms = static_cast<std::size_t>(sma);
    if (r.has("transport", "subsample_seed")) t.subsample_seed = r.unsigned_int("transport", "subsample_seed");

    c.hash = fnv1a_hex(seed_override ? text + "\nseed_override=" + std::to_string(*seed_override) : text);
    return c;
}

ScenarioConfig load_config(const std::string& path, const std::uint64_t* seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), seed_override);
}

PhaseEnsemble generate_initial(const InitialSpec& spec, std::uint64_t seed) {
    const int d = spec.dim;
    if (d != 2 && d != 3) throw PreconditionError("dimension must be 2 or 3");
    if (spec.n == 0) throw PreconditionError("ensemble needs at least one particle");
    PhaseEnsemble ens(d, spec.n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> normal;
    const double w = spec.mass / static_cast<double>(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        ens.weights[i] = w;
        auto x = ens.position(i);
        auto v = ens.velocity(i);
        if (spec.generator == Generator::TwoStream) {
            for (int k = 0; k < d; ++k) x[k] = spec.radius * unif(rng);
        } else {
            double r2;
            do {
                r2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    x[k] = unif(rng);
                    r2 += x[k] * x[k];
                }
            } while (r2 >= 1.0);
            for (int k = 0; k < d; ++k) x[k] *= spec.radius;
        }
        for (int k = 0; k < d; ++k) v[k] = spec.velocity_spread > 0.0 ? spec.velocity_spread * normal(rng) : 0.0;
        if (spec.generator == Generator::TwoStream) v[0] += (i % 2 == 0 ? 1.0 : -1.0) * spec.stream_speed;
    }
    return ens;
}

PhaseEnsemble perturb(const PhaseEnsemble& ens, const TwinSpec& twin, std::uint64_t seed) {
    PhaseEnsemble out = ens;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto x = out.position(i);
        auto v = out.velocity(i);
        for (int k = 0; k < out.dim; ++k) x[k] += twin.dx * unif(rng);
        for (int k = 0; k < out.dim; ++k) v[k] += twin.dv * unif(rng);
    }
    return out;
}

FieldModel make_field_model(const KernelConfig& k, const PhaseEnsemble& ens) {
    switch (k.kind) {
        case FieldKind::Free:
            return FieldModel::free_streaming(ens.dim);
        case FieldKind::Sin:
            return FieldModel(KernelSpec::custom_kernel(ens.dim, [d = ens.dim, s = k.sign](std::span<const double> w) {
                Point out{};
                for (int j = 0; j < d; ++j) out[j] = s * std::sin(w[j]);
                return out;
            }));
        case FieldKind::Newton:
            break;
    }
    const double eps = k.softening < 0.0 ? default_softening(ens) : k.softening;
    return FieldModel(KernelSpec::newton(ens.dim, k.sign, eps));
}

}  // namespace vpstab
