#include "subfp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "subfp/quadrature.hpp"
#include "subfp/quantum.hpp"

namespace subfp {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ config

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "experiment") c.experiment = val;
            else if (key == "potential.preset") c.potential_preset = val;
            else if (key == "potential.omega2") c.omega2 = std::stod(val);
            else if (key == "potential.amplitude") c.amplitude = std::stod(val);
            else if (key == "potential.wavenumber") c.wavenumber = std::stod(val);
            else if (key == "potential.bump_center") c.bump_center = std::stod(val);
            else if (key == "potential.bump_width") c.bump_width = std::stod(val);
            else if (key == "jump.preset") c.jump_preset = val;
            else if (key == "jump.scale") c.jump_scale = std::stod(val);
            else if (key == "grid.L") c.grid.L = std::stod(val);
            else if (key == "grid.nx") c.grid.nx = std::stoi(val);
            else if (key == "grid.nxi") c.grid.nxi = std::stoi(val);
            else if (key == "scan.h") c.h_list = parse_list(val);
            else if (key == "gamma.rule") c.gamma_rule = val;
            else if (key == "gamma.value") c.gamma = std::stod(val);
            else if (key == "rho") c.rho = std::stod(val);
            else if (key == "parametrix.N") c.parametrix_N = std::stoi(val);
            else if (key == "time.T") c.T = std::stod(val);
            else if (key == "time.dt") c.dt = std::stod(val);
            else if (key == "time.dt_q") c.dt_q = std::stod(val);
            else if (key == "time.final") c.t_final = std::stod(val);
            else if (key == "eps.list") c.eps_list = parse_list(val);
            else if (key == "bump.x0") c.x0 = std::stod(val);
            else if (key == "bump.xi0") c.xi0 = std::stod(val);
            else if (key == "bump.sigma_x") c.sigma_x = std::stod(val);
            else if (key == "bump.sigma_xi") c.sigma_xi = std::stod(val);
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "out.dir") c.out_dir = val;
            else if (key == "workers") c.workers = std::stoi(val);
            else
                throw std::invalid_argument("unknown key");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " (key '" +
                                        key + "'): " + e.what());
        }
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
}

void ExperimentConfig::validate() const {
    static const std::vector<std::string> known = {
        "kernel-verify",     "parametrix-order", "fp-evolve",        "gronwall-scan",
        "correspondence-li", "correspondence-gaz", "opbound-scan"};
    if (std::find(known.begin(), known.end(), experiment) == known.end())
        throw std::invalid_argument("field 'experiment': unknown experiment '" + experiment +
                                    "'");
    if (potential_preset != "zero" && potential_preset != "harmonic" &&
        potential_preset != "harmonic-sine" && potential_preset != "harmonic-bump")
        throw std::invalid_argument("field 'potential.preset': unknown preset");
    if (jump_preset != "x" && jump_preset != "x-scaled")
        throw std::invalid_argument("field 'jump.preset': unknown preset");
    if (jump_preset == "x-scaled" && jump_scale == 0.0)
        throw std::invalid_argument("field 'jump.scale': must be nonzero");
    if (grid.L <= 0.0 || grid.nx < 8 || grid.nxi < 8)
        throw std::invalid_argument("field 'grid': L > 0 and nx, nxi >= 8 required");
    if ((experiment == "correspondence-li" || experiment == "correspondence-gaz") &&
        h_list.empty())
        throw std::invalid_argument("field 'scan.h': empty h-list");
    for (double h : h_list)
        if (!(h > 0.0) || h > 1.0)
            throw std::invalid_argument("field 'scan.h': h values must lie in (0, 1]");
    if (gamma_rule != "fixed" && gamma_rule != "rho")
        throw std::invalid_argument("field 'gamma.rule': must be fixed or rho");
    if (gamma < 0.0 || gamma > 1.0)
        throw std::invalid_argument("field 'gamma.value': must lie in [0, 1]");
    if (rho < 0.5 || rho > 2.0 / 3.0)
        throw std::invalid_argument("field 'rho': must lie in [1/2, 2/3]");
    if (parametrix_N < 1 || parametrix_N > 6)
        throw std::invalid_argument("field 'parametrix.N': must lie in 1..6");
    if (dt <= 0.0 || dt_q <= 0.0 || T <= 0.0 || t_final < 0.0)
        throw std::invalid_argument("field 'time': steps and horizons must be positive");
    if (experiment == "gronwall-scan") {
        if (eps_list.empty()) throw std::invalid_argument("field 'eps.list': empty");
        for (double e : eps_list)
            if (!(e > 0.0) || e > 0.7)
                throw std::invalid_argument("field 'eps.list': eps must lie in (0, 0.7]");
    }
    if (sigma_x <= 0.0 || sigma_xi <= 0.0)
        throw std::invalid_argument("field 'bump.sigma': must be positive");
}

PotentialSpec ExperimentConfig::make_potential() const {
    if (potential_preset == "zero") return PotentialSpec::zero(1);
    if (potential_preset == "harmonic") return PotentialSpec::harmonic(1, omega2);
    if (potential_preset == "harmonic-sine")
        return PotentialSpec::harmonic_sine(1, omega2, amplitude, wavenumber);
    return PotentialSpec::with_bump(1, omega2, amplitude, bump_center, bump_width);
}

JumpSpec ExperimentConfig::make_jump() const {
    if (jump_preset == "x") return JumpSpec::position(1);
    return JumpSpec::scaled_position(1, jump_scale);
}

// ------------------------------------------------------------------ report

bool RunReport::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

std::string report_csv_text(const RunReport& rep) {
    std::string out;
    for (size_t i = 0; i < rep.columns.size(); ++i) {
        out += rep.columns[i];
        out += (i + 1 < rep.columns.size()) ? ',' : '\n';
    }
    for (const auto& row : rep.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            out += (i + 1 < row.size()) ? ',' : '\n';
        }
    }
    return out;
}

void write_report_csv(const RunReport& rep, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << report_csv_text(rep);
}

std::string effective_out_dir(const ExperimentConfig& cfg) {
    const char* env = std::getenv("SUBFP_OUT_DIR");
    return env && *env ? env : cfg.out_dir;
}

int effective_workers(const ExperimentConfig& cfg) {
    const char* env = std::getenv("SUBFP_WORKERS");
    if (env && *env) return std::max(1, std::atoi(env));
    return cfg.workers > 0 ? cfg.workers : 1;
}

// ------------------------------------------------------------------ svg

namespace {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> pts;  // (x, y), positive
};

void svg_loglog(const std::string& path, const std::string& title, const std::string& xlabel,
                const std::string& ylabel, const std::vector<SvgSeries>& series,
                const std::vector<std::pair<double, std::string>>& slopes) {
    const int W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.pts) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin >= xmax) { xmin *= 0.5; xmax = xmin * 4 + 1; }
    if (ymin >= ymax) { ymin *= 0.5; ymax = ymin * 4 + 1; }
    const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
    const double ly0 = std::log10(ymin), ly1 = std::log10(ymax);
    auto X = [&](double x) {
        return ml + (std::log10(x) - lx0) / std::max(lx1 - lx0, 1e-12) * (W - ml - mr);
    };
    auto Y = [&](double y) {
        return H - mb - (std::log10(y) - ly0) / std::max(ly1 - ly0, 1e-12) * (H - mt - mb);
    };
    static const char* colors[] = {"#1f6fb2", "#c23b22", "#2e8540", "#7d3fb2", "#b28b1f"};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    char buf[512];
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"24\" font-size=\"15\" font-family=\"sans-serif\">%s</text>\n",
                  ml, title.c_str());
    f << buf;
    // axes
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n"
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
                  ml, H - mb, W - mr, H - mb, ml, mt, ml, H - mb);
    f << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\" font-family=\"sans-serif\">%s</text>\n",
                  (W - ml) / 2, H - 12, xlabel.c_str());
    f << buf;
    std::snprintf(
        buf, sizeof buf,
        "<text x=\"14\" y=\"%d\" font-size=\"12\" font-family=\"sans-serif\" "
        "transform=\"rotate(-90 14 %d)\">%s</text>\n",
        (H + mt) / 2, (H + mt) / 2, ylabel.c_str());
    f << buf;
    int ci = 0;
    int ly = mt + 14;
    for (const auto& s : series) {
        const char* col = colors[ci % 5];
        std::string poly;
        for (auto [x, y] : s.pts) {
            if (!(x > 0.0) || !(y > 0.0)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(x), Y(y));
            poly += buf;
            std::snprintf(buf, sizeof buf,
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3.5\" fill=\"%s\"/>\n", X(x),
                          Y(y), col);
            f << buf;
        }
        if (s.pts.size() > 1) {
            f << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"" << col
              << "\" stroke-width=\"1\"/>\n";
        }
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%d\" y=\"%d\" font-size=\"12\" font-family=\"sans-serif\" "
                      "fill=\"%s\">%s</text>\n",
                      W - mr - 220, ly, col, s.label.c_str());
        f << buf;
        ly += 16;
        ++ci;
    }
    for (const auto& [slope, label] : slopes) {
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%d\" y=\"%d\" font-size=\"12\" font-family=\"sans-serif\">"
                      "%s slope = %.4f</text>\n",
                      ml + 10, ly, label.c_str(), slope);
        f << buf;
        ly += 16;
    }
    f << "</svg>\n";
}

}  // namespace

// ------------------------------------------------------------------ cache

std::string cache_directory() {
    const char* env = std::getenv("SUBFP_CACHE_DIR");
    return env && *env ? env : "cache";
}

std::vector<std::string> cache_list() {
    std::vector<std::string> out;
    const fs::path dir = cache_directory();
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

void cache_clear() {
    const fs::path dir = cache_directory();
    if (!fs::exists(dir)) return;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") fs::remove(e.path());
}

KernelSum cached_parametrix(const ExperimentConfig& cfg, int N, double eps, ParametrixSide side,
                            bool* was_cached) {
    char key[256];
    std::snprintf(key, sizeof key, "pmx_%s_o%g_a%g_w%g_%s_N%d_T%g_e%g_%s.json",
                  cfg.potential_preset.c_str(), cfg.omega2, cfg.amplitude, cfg.wavenumber,
                  cfg.jump_preset.c_str(), N, cfg.T, eps,
                  side == ParametrixSide::Right ? "right" : "left");
    const fs::path dir = cache_directory();
    const fs::path file = dir / key;
    if (fs::exists(file)) {
        std::ifstream f(file);
        std::stringstream ss;
        ss << f.rdbuf();
        if (was_cached) *was_cached = true;
        return kernel_sum_from_json(ss.str());
    }
    SpacetimePoint w0{0.0, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)}};
    FrameExpansionOptions fopt;
    fopt.t_domain = cfg.T;
    fopt.jmax = std::max(2 * N + 4, 8);
    auto fe = frame_expansion(w0, N, cfg.make_potential(), cfg.make_jump(), cfg.gamma, fopt);
    auto res = build_parametrix(fe.P, N, eps, side);
    fs::create_directories(dir);
    std::ofstream f(file);
    f << kernel_sum_to_json(res.K);
    if (was_cached) *was_cached = false;
    return res.K;
}

// ------------------------------------------------------- experiment helpers

namespace {

GridSymbol config_bump(const ExperimentConfig& cfg, const FPConfig& fpc) {
    return GridSymbol::sampled(cfg.grid, fpc, [&](double x, double xi) {
        const double u = (x - cfg.x0) / cfg.sigma_x;
        const double v = (xi - cfg.xi0) / cfg.sigma_xi;
        return std::exp(-0.5 * (u * u + v * v));
    });
}

void add_verdict(RunReport& rep, const std::string& name, bool pass, double value,
                 double threshold, const std::string& note = "") {
    rep.verdicts.push_back({name, pass, value, threshold, note});
}

// -------- kernel-verify: group laws, frame, fundamental solution, conv, L1

RunReport run_kernel_verify_part(const ExperimentConfig& cfg, int part) {
    RunReport rep;
    rep.experiment_id = "kernel-verify";
    rep.columns = {"check", "value", "threshold", "pass"};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto rnd_elem = [&](int n) {
        GroupElement g = GroupElement::identity(n);
        g.y0 = u(rng);
        for (int i = 0; i < n; ++i) {
            g.yp[i] = u(rng);
            g.ypp[i] = u(rng);
        }
        return g;
    };
    auto push = [&](const std::string& name, double value, double thr) {
        rep.rows.push_back({name, fmt(value), fmt(thr), value <= thr ? "1" : "0"});
        add_verdict(rep, name, value <= thr, value, thr);
    };

    if (part == 0 || part == 1)
    for (int n : {1, 2}) {
        // associativity
        double worst = 0.0;
        for (int it = 0; it < 1000; ++it) {
            auto x = rnd_elem(n), z = rnd_elem(n), y = rnd_elem(n);
            auto l = group_mul(group_mul(x, z), y);
            auto r = group_mul(x, group_mul(z, y));
            for (int k = 0; k <= 2 * n; ++k) worst = std::max(worst, std::abs(l.coord(k) - r.coord(k)));
        }
        push("associativity_n" + std::to_string(n), worst, 1e-8);
        // inverse / identity
        worst = 0.0;
        for (int it = 0; it < 200; ++it) {
            auto y = rnd_elem(n);
            auto e = group_mul(group_inv(y), y);
            for (int k = 0; k <= 2 * n; ++k) worst = std::max(worst, std::abs(e.coord(k)));
        }
        push("inverse_identity_n" + std::to_string(n), worst, 1e-12);
        // dilation automorphism
        worst = 0.0;
        std::uniform_real_distribution<double> ur(0.2, 3.0);
        for (int it = 0; it < 1000; ++it) {
            auto z = rnd_elem(n), y = rnd_elem(n);
            const double r = ur(rng);
            auto l = dilate(r, group_mul(z, y));
            auto rr = group_mul(dilate(r, z), dilate(r, y));
            for (int k = 0; k <= 2 * n; ++k)
                worst = std::max(worst, std::abs(l.coord(k) - rr.coord(k)));
        }
        push("dilation_automorphism_n" + std::to_string(n), worst, 1e-8);
    }

    // frame commutation via second-order finite differences on polynomials
    if (part == 0 || part == 1) {
        const int n = 1;
        auto poly = [](const GroupElement& y) {
            return y.y0 * y.y0 * y.yp[0] + y.ypp[0] * y.yp[0] - 0.3 * y.ypp[0] * y.y0;
        };
        const double fd_h = 1e-4;
        auto frame_fd = [&](int j, const std::function<double(const GroupElement&)>& f,
                            const GroupElement& y) {
            auto d = [&](int coord) {
                GroupElement p = y, m = y;
                p.coord(coord) += fd_h;
                m.coord(coord) -= fd_h;
                return (f(p) - f(m)) / (2 * fd_h);
            };
            if (j == 0) return d(0) - 0.5 * y.yp[0] * d(2);
            if (j == 1) return d(1) + 0.5 * y.y0 * d(2);
            return d(2);
        };
        double worst = 0.0;
        for (int it = 0; it < 50; ++it) {
            auto y = rnd_elem(1);
            // [Y0, Y1] f = Y2 f
            auto y0y1 = [&](const GroupElement& p) { return frame_fd(1, poly, p); };
            auto y1y0 = [&](const GroupElement& p) { return frame_fd(0, poly, p); };
            const double comm = frame_fd(0, y0y1, y) - frame_fd(1, y1y0, y);
            const double expect = frame_fd(2, poly, y);
            const double scale = std::max(1.0, std::abs(expect));
            worst = std::max(worst, std::abs(comm - expect) / scale);
        }
        push("frame_commutation_fd", worst, 1e-8);
    }

    // homogeneity on monomials with analytic partials
    if (part == 0 || part == 1) {
        double worst = 0.0;
        for (auto [a0, ap, app] : std::vector<std::array<int, 3>>{
                 {1, 1, 0}, {0, 2, 1}, {2, 0, 1}, {0, 1, 2}}) {
            MultiIndex mi(a0, {ap}, {app});
            ScalarField f;
            f.value = [mi](const GroupElement& y) { return eval_monomial(mi, y); };
            f.partial = [mi](const GroupElement& y, int k) {
                MultiIndex d = mi;
                int c = (k == 0) ? d.a0 : (k == 1 ? d.ap[0] : d.app[0]);
                if (c == 0) return 0.0;
                if (k == 0) d.a0 -= 1;
                else if (k == 1) d.ap[0] -= 1;
                else d.app[0] -= 1;
                return c * eval_monomial(d, y);
            };
            for (double r : {0.5, 1.7}) {
                for (int j = 0; j <= 2; ++j) {
                    std::uniform_real_distribution<double> up(0.2, 1.5);
                    GroupElement y(up(rng), {up(rng)}, {up(rng)});
                    // L(f o delta_r)(y) = r^ord (Lf)(delta_r y)
                    ScalarField fr;
                    fr.value = [&](const GroupElement& p) { return f.value(dilate(r, p)); };
                    fr.partial = [&](const GroupElement& p, int k) {
                        const double fac = (k == 0) ? r * r : (k == 1 ? r : r * r * r);
                        return fac * f.partial(dilate(r, p), k);
                    };
                    const double lhs = frame_apply(FrameId{j}, fr, y);
                    const double ord = frame_order(FrameId{j}, 1);
                    const double rhs = std::pow(r, ord) * frame_apply(FrameId{j}, f, dilate(r, y));
                    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
                }
            }
        }
        push("frame_homogeneity", worst, 1e-10);
    }

    // fundamental solution (criterion 2): analytic application, kernel-scaled points
    if (part == 0 || part == 2) {
        double worst = 0.0;
        std::uniform_real_distribution<double> uy(0.05, 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto K = KernelSum::k0(1, 1.0);
        auto Y0K = apply_frame(K, FrameId{0});
        auto Y1K = apply_frame(apply_frame(K, FrameId{1}), FrameId{1});
        for (int it = 0; it < 100; ++it) {
            const double y0 = uy(rng);
            GroupElement y(y0, {std::sqrt(2 * y0) * gauss(rng)},
                           {std::sqrt(y0 * y0 * y0 / 6.0) * gauss(rng)});
            double num = Y0K.eval(y) - Y1K.eval(y);
            double scale = 0.0;
            for (const auto& t : Y0K.terms()) {
                GroupElement yy = y;
                scale += std::abs(t.coeff(y.y0) * eval_monomial(t.gamma, yy)) * eval_K0(y, 1.0);
            }
            worst = std::max(worst, std::abs(num) / std::max(scale, 1e-300));
        }
        push("fundamental_solution", worst, 1e-9);
    }

    // convolution identities (criterion 3)
    if (part == 0 || part == 3) {
        auto K0s = KernelSum::k0(1, 1.0);
        auto c1 = convolve_with_K0(K0s);
        double symbolic_err = 1e300;
        if (c1.size() == 1) {
            const auto& t = c1.terms()[0];
            if (t.gamma.a0 == 1 && t.gamma.ap[0] == 0 && t.gamma.app[0] == 0) {
                symbolic_err = 0.0;
                for (double s : {0.1, 0.4, 0.9}) symbolic_err = std::max(symbolic_err, std::abs(t.coeff(s) - 1.0));
            }
        }
        push("conv_f1_symbolic", symbolic_err, 1e-12);
        KernelSum Ks(1, 1.0);
        Ks.add_term({0, CoefficientFn::polynomial({0.0, 1.0}), MultiIndex::zero(1)});
        auto c2 = convolve_with_K0(Ks);  // f(z0) = z0 -> 1/2 y0^2 K0
        double err2 = 1e300;
        if (c2.size() == 1) {
            const auto& t = c2.terms()[0];
            err2 = 0.0;
            for (double s : {0.1, 0.4, 0.9})
                err2 = std::max(err2,
                                std::abs(t.coeff(s) * std::pow(s, t.gamma.a0) - 0.5 * s * s));
        }
        push("conv_fs_symbolic", err2, 1e-12);

        // numeric 3D quadrature cross-check at 5 points
        auto conv_quad = [&](const KernelSum& K, const GroupElement& y, double eps) {
            const double y0 = y.y0, ypv = y.yp[0], yppv = y.ypp[0];
            auto outer = [&](double z0) {
                const double s1 = 2.0 * z0 * eps * eps;
                const double s2 = 2.0 * (y0 - z0) * eps * eps;
                const double mup = ypv * s1 / (s1 + s2);
                const double spv = std::sqrt(s1 * s2 / (s1 + s2));
                const double s1pp = eps * eps * z0 * z0 * z0 / 6.0;
                const double s2pp = eps * eps * (y0 - z0) * (y0 - z0) * (y0 - z0) / 6.0;
                auto mid = [&](double zp) {
                    const double c2 = yppv - 0.5 * z0 * ypv + 0.5 * y0 * zp;
                    const double mupp = c2 * s1pp / (s1pp + s2pp);
                    const double sppv = std::sqrt(s1pp * s2pp / (s1pp + s2pp));
                    auto inner = [&](double zpp) {
                        GroupElement z(z0, {zp}, {zpp});
                        return eval_K0(group_mul(group_inv(z), y), eps) * K.eval(z);
                    };
                    QuadOptions o3;
                    o3.rel_tol = 3e-10;
                    o3.abs_tol = std::max(1e-280, 1e-10 * std::abs(inner(mupp)) * sppv);
                    return integrate_1d(inner, mupp - 14 * sppv, mupp + 14 * sppv, o3);
                };
                QuadOptions o2;
                o2.rel_tol = 1e-9;
                o2.abs_tol = std::max(1e-280, 3e-10 * std::abs(mid(mup)) * spv);
                return integrate_1d(mid, mup - 14 * spv, mup + 14 * spv, o2);
            };
            QuadOptions o1;
            o1.rel_tol = 1e-8;
            o1.abs_tol = 1e-300;
            return integrate_1d(outer, 3e-8 * y0, y0 * (1.0 - 3e-8), o1);
        };
        double worst = 0.0;
        const GroupElement pts[5] = {GroupElement(2.0, {0.3}, {0.1}),
                                     GroupElement(0.9, {0.35}, {0.12}),
                                     GroupElement(0.5, {-0.2}, {0.05}),
                                     GroupElement(1.4, {0.1}, {-0.3}),
                                     GroupElement(0.7, {0.0}, {0.0})};
        for (const auto& y : pts) {
            const double sym = c1.eval(y);
            const double quad = conv_quad(K0s, y, 1.0);
            worst = std::max(worst, std::abs(sym - quad) / std::abs(quad));
        }
        push("conv_quadrature_crosscheck", worst, 1e-5);
    }

    // kernel L1 scaling (criterion 4): six gammas spanning orders -1..4
    if (part == 0 || part == 4) {
        const std::vector<MultiIndex> gammas = {
            MultiIndex(-1, {1}, {0}), MultiIndex(0, {0}, {0}), MultiIndex(0, {1}, {0}),
            MultiIndex(1, {0}, {0}),  MultiIndex(0, {0}, {1}), MultiIndex(0, {1}, {1})};
        double worst = 0.0;
        for (const auto& g : gammas) {
            KernelSum K(1, 1.0);
            K.add_term({0, CoefficientFn::constant(1.0), g});
            std::vector<std::pair<double, double>> pts;
            for (int i = 0; i < 12; ++i) {
                const double y0 = 0.01 * std::pow(100.0, i / 11.0);
                pts.push_back({y0, kernel_L1_slice_norm(K, y0)});
            }
            double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (auto [x, y] : pts) {
                const double lx = std::log(x), lyv = std::log(y);
                sw += 1; sx += lx; sy += lyv; sxx += lx * lx; sxy += lx * lyv;
            }
            const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
            worst = std::max(worst, std::abs(slope - 0.5 * order_of(g)));
            rep.rows.push_back({"l1_slope_ord" + std::to_string(order_of(g)), fmt(slope),
                                fmt(0.5 * order_of(g)), "1"});
        }
        push("l1_scaling_slopes", worst, 1e-6);
    }
    return rep;
}

// -------- parametrix-order (criterion 5)

RunReport run_parametrix_order(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = "parametrix-order";
    rep.columns = {"N", "eps", "y0", "slice_norm"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();
    SpacetimePoint w0{0.0, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)}};
    FrameExpansionOptions fopt;
    fopt.t_domain = cfg.T;
    fopt.jmax = 8;
    auto fe = frame_expansion(w0, cfg.parametrix_N, pot, jump, cfg.gamma, fopt);

    std::vector<std::pair<double, std::string>> slope_rows;
    for (int N : {2, 3}) {
        for (double eps : {1.0, 0.5}) {
            auto res = build_parametrix(fe.P, N, eps, ParametrixSide::Right);
            std::vector<std::pair<double, double>> pts;
            for (int i = 0; i < 9; ++i) {
                const double y0 = 1e-3 * std::pow(100.0, i / 8.0);
                const double v = res.R.empty()
                                     ? 0.0
                                     : kernel_L1_slice_norm(res.R, y0, L1Mode::Quadrature);
                rep.rows.push_back({std::to_string(N), fmt(eps), fmt(y0), fmt(v)});
                if (v > 0.0) pts.push_back({y0, v});
            }
            if (pts.size() >= 4) {
                auto fit = scaling_fit(pts);
                const double target = 0.5 * (N - 1);
                char nm[64];
                std::snprintf(nm, sizeof nm, "residual_slope_N%d_eps%g", N, eps);
                if (eps == 1.0)
                    add_verdict(rep, nm, std::abs(fit.slope - target) <= 0.15, fit.slope,
                                target, "window y0 in [1e-3, 1e-1]");
                slope_rows.push_back({fit.slope, nm});
            } else if (eps == 1.0) {
                char nm[64];
                std::snprintf(nm, sizeof nm, "residual_slope_N%d_eps%g", N, eps);
                add_verdict(rep, nm, false, 0.0, 0.5 * (N - 1), "degenerate: residual empty");
            }
        }
    }
    return rep;
}

// -------- fp-evolve (criteria 6, 7)

RunReport run_fp_evolve(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = "fp-evolve";
    rep.columns = {"t", "quantity", "value"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();
    const double h = 1.0;
    const double gamma = cfg.gamma;
    FPConfig fpc = FPConfig::make(gamma, h, cfg.grid, cfg.dt, cfg.t_final);
    GridSymbol a0 = config_bump(cfg, fpc);

    const int steps = std::max(1, static_cast<int>(std::ceil(cfg.t_final / cfg.dt)));
    const int stride = std::max(1, steps / 50);
    auto traj = fp_evolve_trajectory(a0, cfg.t_final, pot, jump, fpc, stride);
    auto crep = check_conservation_and_contraction(traj);
    for (const auto& g : traj) {
        rep.rows.push_back({fmt(g.t), "mass", fmt(g.mass())});
        rep.rows.push_back({fmt(g.t), "sup", fmt(g.norm_sup())});
        rep.rows.push_back({fmt(g.t), "l1", fmt(g.norm_l1())});
        rep.rows.push_back({fmt(g.t), "l2", fmt(g.norm_l2())});
    }
    add_verdict(rep, "mass_drift", crep.mass_drift_rel <= 1e-8, crep.mass_drift_rel, 1e-8);
    add_verdict(rep, "sup_nonincreasing", crep.sup_increase <= 1e-7, crep.sup_increase, 1e-7);
    add_verdict(rep, "l1_contraction", crep.lp_ratio_max[0] <= 1.0 + 1e-7, crep.lp_ratio_max[0],
                1.0 + 1e-7);
    add_verdict(rep, "l2_contraction", crep.lp_ratio_max[1] <= 1.0 + 1e-7, crep.lp_ratio_max[1],
                1.0 + 1e-7);
    add_verdict(rep, "sup_contraction", crep.lp_ratio_max[2] <= 1.0 + 1e-7, crep.lp_ratio_max[2],
                1.0 + 1e-7);

    if (cfg.potential_preset == "zero") {
        // free-case exactness vs the closed-form kernel propagation
        const GridSymbol& a1 = traj.back();
        const double t = a1.t, eps = fpc.eps;
        const double sx = cfg.sigma_x, sxi = cfg.sigma_xi;
        const double s11 = sx * sx + (2.0 / 3.0) * eps * eps * t * t * t;
        const double s12 = eps * eps * t * t;
        const double s22 = sxi * sxi + 2.0 * eps * eps * t;
        const double det0 = sx * sx * sxi * sxi, dett = s11 * s22 - s12 * s12;
        const double amp = std::sqrt(det0 / dett);
        double worst = 0.0;
        for (int ix = 0; ix < a1.nx; ++ix)
            for (int ixi = 0; ixi < a1.nxi; ++ixi) {
                const double x = a1.x(ix), xi = a1.xi(ixi);
                const double v1 = x + t * xi - cfg.x0, v2 = xi - cfg.xi0;
                const double q = (s22 * v1 * v1 - 2 * s12 * v1 * v2 + s11 * v2 * v2) / dett;
                const double ex = amp * std::exp(-0.5 * q);
                worst = std::max(worst, std::abs(ex - a1.at(ix, ixi)));
            }
        rep.rows.push_back({fmt(t), "free_case_sup_err", fmt(worst)});
        add_verdict(rep, "free_case_exactness", worst <= 1e-6, worst, 1e-6);
    }
    return rep;
}

// -------- gronwall-scan (criterion 8)

RunReport run_gronwall(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = "gronwall-scan";
    rep.columns = {"eps", "p", "t", "ratio"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();
    const int maxN = 2;
    std::map<double, std::array<double, 2>> envelope;  // eps -> sup ratio for p=1,inf
    for (double eps : cfg.eps_list) {
        const double h = 1.0, gamma = 2.0 * eps * eps / h;
        FPConfig fpc = FPConfig::make(gamma, h, cfg.grid, cfg.dt, cfg.t_final);
        GridSymbol a0 = config_bump(cfg, fpc);
        const int steps = std::max(1, static_cast<int>(std::ceil(cfg.t_final / cfg.dt)));
        const int stride = std::max(1, static_cast<int>(std::round(0.1 / (cfg.t_final / steps))));
        auto traj = fp_evolve_trajectory(a0, cfg.t_final, pot, jump, fpc, stride);
        double s0[2] = {0.0, 0.0};
        std::array<double, 2> env = {0.0, 0.0};
        for (size_t i = 0; i < traj.size(); ++i) {
            auto rows = scaled_derivative_norms(traj[i], maxN);
            double s[2] = {0.0, 0.0};
            for (const auto& r : rows) {
                s[0] += r.l1;
                s[1] += r.sup;
            }
            if (i == 0) {
                s0[0] = s[0];
                s0[1] = s[1];
            }
            const double r1 = s[0] / s0[0], rinf = s[1] / s0[1];
            rep.rows.push_back({fmt(eps), "1", fmt(traj[i].t), fmt(r1)});
            rep.rows.push_back({fmt(eps), "inf", fmt(traj[i].t), fmt(rinf)});
            env[0] = std::max(env[0], r1);
            env[1] = std::max(env[1], rinf);
        }
        envelope[eps] = env;
        char nm[64];
        std::snprintf(nm, sizeof nm, "gronwall_envelope_eps%g_l1", eps);
        add_verdict(rep, nm, env[0] <= 20.0, env[0], 20.0);
        std::snprintf(nm, sizeof nm, "gronwall_envelope_eps%g_sup", eps);
        add_verdict(rep, nm, env[1] <= 20.0, env[1], 20.0);
    }
    const double emin = *std::min_element(cfg.eps_list.begin(), cfg.eps_list.end());
    const double emax = *std::max_element(cfg.eps_list.begin(), cfg.eps_list.end());
    for (int p = 0; p < 2; ++p) {
        const double ratio = envelope[emin][p] / envelope[emax][p];
        add_verdict(rep, p == 0 ? "gronwall_eps_trend_l1" : "gronwall_eps_trend_sup",
                    ratio <= 2.0, ratio, 2.0, "envelope(min eps)/envelope(max eps)");
    }
    return rep;
}

// -------- opbound-scan (criterion 9 and the fixed-time parametrix bound)

RunReport run_opbound(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = "opbound-scan";
    rep.columns = {"kind", "order", "p", "t", "value"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();

    // smoothing rate (6.3): C_{N,T} vs T for a narrow bump
    {
        const double eps = 0.4, h = 1.0, gamma = 2.0 * eps * eps;
        FPConfig fpc = FPConfig::make(gamma, h, cfg.grid, cfg.dt, 1.0);
        GridSymbol a0 = config_bump(cfg, fpc);
        const double n0[2] = {a0.norm_l1(), a0.norm_sup()};
        const std::vector<double> Ts = {0.125, 0.25, 0.5, 1.0};
        std::map<int, std::array<std::vector<std::pair<double, double>>, 2>> series;
        for (double T : Ts) {
            auto aT = fp_evolve(a0, T, pot, jump, fpc);
            auto rows = scaled_derivative_norms(aT, 2);
            for (int N : {1, 2}) {
                double s[2] = {0.0, 0.0};
                for (const auto& r : rows) {
                    if (r.a_xi + 3 * r.a_x > N) continue;
                    s[0] += r.l1;
                    s[1] += r.sup;
                }
                for (int p = 0; p < 2; ++p) {
                    const double ratio = s[p] / n0[p];
                    series[N][p].push_back({T, ratio});
                    rep.rows.push_back({"smoothing", std::to_string(N), p == 0 ? "1" : "inf",
                                        fmt(T), fmt(ratio)});
                }
            }
        }
        // the L1 ratio is the faithful stand-in for C_{N,T}: mass conservation
        // anchors the zero-derivative term, so the slope reflects the envelope
        // growth; the sup ratio of a fixed bump also carries the solution's own
        // peak collapse and is reported as data only
        for (int N : {1, 2}) {
            auto fit = scaling_fit(series[N][0]);
            char nm[64];
            std::snprintf(nm, sizeof nm, "smoothing_slope_N%d_l1", N);
            const bool ok = fit.slope >= -0.5 * N - 0.3 && fit.slope <= 0.0 + 1e-9;
            add_verdict(rep, nm, ok, fit.slope, -0.5 * N - 0.3, "window [-N/2 - 0.3, 0]");
        }
    }

    // fixed-time operator bound (Cor 5.2): leading parametrix derivatives
    {
        const double eps = 0.4, h = 1.0, gamma = 2.0 * eps * eps;
        GridSpec g2 = cfg.grid;
        FPConfig fpc = FPConfig::make(gamma, h, g2, cfg.dt, 1.0);
        const double sf = 0.05;
        auto f0 = [&](double x, double xi) {
            const double q = (x * x + xi * xi) / (2 * sf * sf);
            return std::exp(-q) / (2 * 3.14159265358979323846 * sf * sf);
        };
        KernelSum K0e = KernelSum::k0(1, eps);
        std::map<int, std::array<std::vector<std::pair<double, double>>, 2>> series;
        for (double t : {0.15, 0.25, 0.4, 0.65}) {
            auto gt = parametrix_evolve(f0, t, K0e, pot, jump, fpc);
            auto rows = scaled_derivative_norms(gt, 3);
            for (const auto& r : rows) {
                if (r.a_x != 0 || r.a_xi < 1) continue;
                series[r.a_xi][0].push_back({t, r.l1});
                series[r.a_xi][1].push_back({t, r.sup});
                rep.rows.push_back({"cor52", std::to_string(r.a_xi), "1", fmt(t), fmt(r.l1)});
                rep.rows.push_back({"cor52", std::to_string(r.a_xi), "inf", fmt(t), fmt(r.sup)});
            }
        }
        for (int k : {1, 2, 3})
            for (int p = 0; p < 2; ++p) {
                auto fit = scaling_fit(series[k][p]);
                char nm[64];
                std::snprintf(nm, sizeof nm, "cor52_slope_ord%d_%s", k, p == 0 ? "l1" : "sup");
                add_verdict(rep, nm, std::abs(fit.slope + 0.5 * k) <= 0.2, fit.slope, -0.5 * k);
            }
    }
    return rep;
}

// -------- correspondence experiments (criteria 10, 11, 12)

int pick_m(double h, double L) {
    // momentum window pi h M / (2L) must cover the symbol support with margin
    int M = 64;
    while (M < 512 && 3.14159265358979323846 * h * M / (2.0 * L) < 1.55) M *= 2;
    return M;
}

RunReport run_correspondence_li(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = cfg.potential_preset == "harmonic" ? "correspondence-li-exact"
                                                           : "correspondence-li";
    rep.columns = {"experiment_id", "h", "gamma", "rho", "t", "err_trace", "err_hs", "grid_M",
                   "dt"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();
    const bool exact_case = cfg.potential_preset == "harmonic";

    auto bump_for = [&](double h, const FPConfig& fpc) {
        const double s = std::sqrt(h) * 0.8;
        return GridSymbol::sampled(cfg.grid, fpc, [&](double x, double xi) {
            const double u = (x - cfg.x0) / s, v = (xi - cfg.xi0) / s;
            return std::exp(-0.5 * (u * u + v * v));
        });
    };

    if (exact_case) {
        // quadratic V, l = x: errors must stay at the discretization floor
        for (double h : cfg.h_list) {
            const int M = pick_m(h, cfg.grid.L);
            QuantGrid qg{M, cfg.grid.L, h};
            FPConfig fpc = FPConfig::make(cfg.gamma, h, cfg.grid, cfg.dt, cfg.t_final + 1.0);
            GridSymbol a0 = bump_for(h, fpc);
            // generator floor: || L Op(a0) - Op(Q a0) ||
            auto A0 = weyl_quantize(a0, qg);
            auto gen = LindbladGenerator::make(qg, pot, jump, cfg.gamma);
            auto Qa = apply_q(a0, pot, jump, fpc);
            auto OQa = weyl_quantize(Qa, qg);
            ObservableMatrix gd{lindblad_apply(A0.a, gen) - OQa.a, qg};
            const double d0_tr = schatten_norm(gd, SchattenP::One);
            const double d0_hs = schatten_norm(gd, SchattenP::Two);

            const double tmax = cfg.t_final;
            auto r_full = correspondence_error(a0, tmax, pot, jump, fpc, qg, cfg.dt_q);
            // Richardson floor: halve both time steps
            FPConfig fph = fpc;
            fph.dt = fpc.dt / 2.0;
            auto r_half = correspondence_error(a0, tmax, pot, jump, fph, qg, cfg.dt_q / 2.0);
            const double split_tr =
                (4.0 / 3.0) * std::abs(r_full.err_trace - r_half.err_trace) + 4.0 * r_half.err_trace / 3.0;
            const double split_hs =
                (4.0 / 3.0) * std::abs(r_full.err_hs - r_half.err_hs) + 4.0 * r_half.err_hs / 3.0;
            for (double t : {0.5, 1.0, tmax}) {
                auto r = (t == tmax) ? r_full : correspondence_error(a0, t, pot, jump, fpc, qg,
                                                                     cfg.dt_q);
                rep.rows.push_back({rep.experiment_id, fmt(h), fmt(cfg.gamma), fmt(cfg.rho),
                                    fmt(t), fmt(r.err_trace), fmt(r.err_hs), std::to_string(M),
                                    fmt(cfg.dt_q)});
                const double floor_tr = t * d0_tr + split_tr * (t / tmax) + 1e-12;
                const double floor_hs = t * d0_hs + split_hs * (t / tmax) + 1e-12;
                char nm[80];
                std::snprintf(nm, sizeof nm, "exact_case_trace_h%g_t%g", h, t);
                add_verdict(rep, nm, r.err_trace <= 10.0 * floor_tr, r.err_trace,
                            10.0 * floor_tr, "10x discretization floor");
                std::snprintf(nm, sizeof nm, "exact_case_hs_h%g_t%g", h, t);
                add_verdict(rep, nm, r.err_hs <= 10.0 * floor_hs, r.err_hs, 10.0 * floor_hs);
            }
        }
        return rep;
    }

    // Theorem 1.2 scan: err_trace(h) at t = 1 with gamma fixed
    std::vector<std::pair<double, double>> fitpts;
    for (double h : cfg.h_list) {
        const int M = pick_m(h, cfg.grid.L);
        QuantGrid qg{M, cfg.grid.L, h};
        FPConfig fpc = FPConfig::make(cfg.gamma, h, cfg.grid, cfg.dt, 2.0);
        GridSymbol a0 = bump_for(h, fpc);
        auto r = correspondence_error(a0, 1.0, pot, jump, fpc, qg, cfg.dt_q);
        rep.rows.push_back({rep.experiment_id, fmt(h), fmt(cfg.gamma), fmt(cfg.rho), "1",
                            fmt(r.err_trace), fmt(r.err_hs), std::to_string(M), fmt(cfg.dt_q)});
        fitpts.push_back({h, r.err_trace});
    }
    auto fit = scaling_fit(fitpts);
    add_verdict(rep, "li_trace_slope", fit.slope >= 0.4, fit.slope, 0.4,
                "one-sided: upper bound C t h^{1/2}");

    // boundedness of err_trace(t)/t at fixed h
    {
        const double h = 1.0 / 64;
        const int M = pick_m(h, cfg.grid.L);
        QuantGrid qg{M, cfg.grid.L, h};
        FPConfig fpc = FPConfig::make(cfg.gamma, h, cfg.grid, cfg.dt, 11.0);
        GridSymbol a0 = bump_for(h, fpc);
        double ref = 0.0, worst = 0.0;
        for (double t : {1.0, 2.5, 5.0, 10.0}) {
            auto r = correspondence_error(a0, t, pot, jump, fpc, qg, cfg.dt_q);
            rep.rows.push_back({rep.experiment_id, fmt(h), fmt(cfg.gamma), fmt(cfg.rho), fmt(t),
                                fmt(r.err_trace), fmt(r.err_hs), std::to_string(M),
                                fmt(cfg.dt_q)});
            const double per_t = r.err_trace / t;
            if (t == 1.0)
                ref = per_t;
            else
                worst = std::max(worst, per_t / ref);
        }
        add_verdict(rep, "li_linear_t_growth", worst <= 3.0, worst, 3.0,
                    "err_trace(t)/t within factor 3 of t=1 value");
    }
    return rep;
}

RunReport run_correspondence_gaz(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.experiment_id = "correspondence-gaz";
    rep.columns = {"experiment_id", "h", "gamma", "rho", "t", "err_trace", "err_hs", "grid_M",
                   "dt"};
    auto pot = cfg.make_potential();
    auto jump = cfg.make_jump();
    for (double rho : {0.5, 0.6}) {
        std::vector<std::pair<double, double>> fitpts;
        for (double h : cfg.h_list) {
            const double gamma = std::pow(h, 2.0 * rho - 1.0);
            const int M = pick_m(h, cfg.grid.L);
            QuantGrid qg{M, cfg.grid.L, h};
            FPConfig fpc = FPConfig::make(gamma, h, cfg.grid, cfg.dt, 2.0);
            const double s = std::pow(h, rho) * 0.8;
            const double nrm = std::pow(h, 0.5 - rho);  // L2-normalized in the class scale
            GridSymbol a0 = GridSymbol::sampled(cfg.grid, fpc, [&](double x, double xi) {
                const double u = (x - cfg.x0) / s, v = (xi - cfg.xi0) / s;
                return nrm * std::exp(-0.5 * (u * u + v * v));
            });
            auto r = correspondence_error(a0, 1.0, pot, jump, fpc, qg, cfg.dt_q);
            rep.rows.push_back({rep.experiment_id, fmt(h), fmt(gamma), fmt(rho), "1",
                                fmt(r.err_trace), fmt(r.err_hs), std::to_string(M),
                                fmt(cfg.dt_q)});
            fitpts.push_back({h, r.err_hs});
        }
        auto fit = scaling_fit(fitpts);
        char nm[64];
        std::snprintf(nm, sizeof nm, "gaz_hs_slope_rho%g", rho);
        add_verdict(rep, nm, fit.slope >= (2.0 - 3.0 * rho) - 0.15, fit.slope,
                    (2.0 - 3.0 * rho) - 0.15, "one-sided: upper bound C t h^{2-3rho}");
    }
    return rep;
}

}  // namespace

namespace detail {
RunReport kernel_verify_subset(const ExperimentConfig& cfg, int part) {
    return run_kernel_verify_part(cfg, part);
}
}  // namespace detail

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    if (cfg.experiment == "kernel-verify") rep = run_kernel_verify_part(cfg, 0);
    else if (cfg.experiment == "parametrix-order") rep = run_parametrix_order(cfg);
    else if (cfg.experiment == "fp-evolve") rep = run_fp_evolve(cfg);
    else if (cfg.experiment == "gronwall-scan") rep = run_gronwall(cfg);
    else if (cfg.experiment == "correspondence-li") rep = run_correspondence_li(cfg);
    else if (cfg.experiment == "correspondence-gaz") rep = run_correspondence_gaz(cfg);
    else if (cfg.experiment == "opbound-scan") rep = run_opbound(cfg);
    else throw std::invalid_argument("unknown experiment " + cfg.experiment);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

void emit_plots(const RunReport& rep, const std::string& dir) {
    fs::create_directories(dir);
    auto col = [&](const std::string& name) {
        for (size_t i = 0; i < rep.columns.size(); ++i)
            if (rep.columns[i] == name) return static_cast<int>(i);
        return -1;
    };
    if (rep.experiment_id.rfind("correspondence", 0) == 0) {
        const int ch = col("h"), ce = col("err_trace"), ch2 = col("err_hs"), ct = col("t");
        SvgSeries tr{"err_trace vs h (t=1)", {}}, hs{"err_hs vs h (t=1)", {}};
        for (const auto& r : rep.rows) {
            if (r[ct] != "1") continue;
            tr.pts.push_back({std::stod(r[ch]), std::stod(r[ce])});
            hs.pts.push_back({std::stod(r[ch]), std::stod(r[ch2])});
        }
        std::vector<std::pair<double, std::string>> slopes;
        for (const auto& v : rep.verdicts)
            if (v.name.find("slope") != std::string::npos) slopes.push_back({v.value, v.name});
        svg_loglog(dir + "/" + rep.experiment_id + ".svg", rep.experiment_id, "h", "error",
                   {tr, hs}, slopes);
    } else if (rep.experiment_id == "parametrix-order") {
        const int cn = col("N"), cy = col("y0"), cv = col("slice_norm"), ce = col("eps");
        std::map<std::string, SvgSeries> bys;
        for (const auto& r : rep.rows) {
            if (r[ce] != "1") continue;
            auto& s = bys["N=" + r[cn]];
            s.label = "residual L1 slice, N=" + r[cn];
            const double v = std::stod(r[cv]);
            if (v > 0.0) s.pts.push_back({std::stod(r[cy]), v});
        }
        std::vector<SvgSeries> series;
        for (auto& [k, s] : bys) series.push_back(s);
        std::vector<std::pair<double, std::string>> slopes;
        for (const auto& v : rep.verdicts) slopes.push_back({v.value, v.name});
        svg_loglog(dir + "/parametrix-order.svg", "residual slice norms", "y0", "L1 slice",
                   series, slopes);
    } else if (rep.experiment_id == "gronwall-scan") {
        const int ce = col("eps"), cp = col("p"), ct = col("t"), cr = col("ratio");
        std::map<std::string, SvgSeries> bys;
        for (const auto& r : rep.rows) {
            if (r[cp] != "inf") continue;
            auto& s = bys[r[ce]];
            s.label = "eps=" + r[ce] + " (sup)";
            const double t = std::stod(r[ct]);
            if (t > 0.0) s.pts.push_back({t, std::stod(r[cr])});
        }
        std::vector<SvgSeries> series;
        for (auto& [k, s] : bys) series.push_back(s);
        svg_loglog(dir + "/gronwall-scan.svg", "scaled-derivative norm ratios", "t", "ratio",
                   series, {});
    } else if (rep.experiment_id == "fp-evolve") {
        const int ct = col("t"), cq = col("quantity"), cv = col("value");
        SvgSeries mass{"mass", {}}, sup{"sup", {}};
        for (const auto& r : rep.rows) {
            const double t = std::stod(r[ct]);
            if (t <= 0.0) continue;
            if (r[cq] == "mass") mass.pts.push_back({t, std::abs(std::stod(r[cv])) + 1e-300});
            if (r[cq] == "sup") sup.pts.push_back({t, std::stod(r[cv])});
        }
        svg_loglog(dir + "/fp-evolve.svg", "conservation diagnostics", "t", "value",
                   {mass, sup}, {});
    } else if (rep.experiment_id == "opbound-scan") {
        const int ck = col("kind"), co = col("order"), cp = col("p"), ct = col("t"),
                  cv = col("value");
        std::map<std::string, SvgSeries> bys;
        for (const auto& r : rep.rows) {
            if (r[cp] != "1") continue;
            auto& s = bys[r[ck] + " ord " + r[co]];
            s.label = r[ck] + " ord " + r[co] + " (L1)";
            s.pts.push_back({std::stod(r[ct]), std::stod(r[cv])});
        }
        std::vector<SvgSeries> series;
        for (auto& [k, s] : bys) series.push_back(s);
        std::vector<std::pair<double, std::string>> slopes;
        for (const auto& v : rep.verdicts) slopes.push_back({v.value, v.name});
        svg_loglog(dir + "/opbound-scan.svg", "operator bounds", "t or T", "norm", series,
                   slopes);
    } else if (rep.experiment_id == "kernel-verify") {
        // table-style experiment; no plot
    }
}

}  // namespace subfp
