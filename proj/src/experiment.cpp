#include "pltrap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pltrap/coarsegrain.hpp"
#include "pltrap/csv.hpp"
#include "pltrap/dos.hpp"
#include "pltrap/emptiness.hpp"
#include "pltrap/gammafn.hpp"
#include "pltrap/geometry.hpp"
#include "pltrap/lattice.hpp"
#include "pltrap/spectral.hpp"
#include "pltrap/survival.hpp"

namespace fs = std::filesystem;

namespace pltrap {

namespace {

const char* kVersion = "0.1.0";

struct Schema {
    std::vector<FieldSpec> fields;
    const FieldSpec* find(const std::string& key) const {
        for (const auto& f : fields)
            if (f.key == key) return &f;
        return nullptr;
    }
};

std::map<std::string, Schema> build_schemas() {
    std::map<std::string, Schema> s;
    auto add = [&](const std::string& kind, std::vector<FieldSpec> fs) {
        s[kind] = Schema{std::move(fs)};
    };
    add("sample", {{"law.kind", "string", "power_tail"},
                   {"law.theta", "double", "2"},
                   {"d", "int", "2"},
                   {"window.side", "double", "10"},
                   {"trunc.radius", "double", "0"}});
    add("emptiness", {{"law.kind", "string", "power_tail"},
                      {"law.theta", "double", "2"},
                      {"d", "int", "2"},
                      {"region.file", "string", ""},
                      {"region.side", "double", "5"},
                      {"trunc.radius", "double", "0"},
                      {"quad.resolution", "double", "0"}});
    add("holefun", {{"d", "int", "2"},
                    {"region.file", "string", ""},
                    {"region.side", "double", "2"},
                    {"theta", "double", "1"},
                    {"quad.resolution", "double", "0"}});
    add("eig", {{"d", "int", "2"},
                {"region.file", "string", ""},
                {"punched.n", "int", "1"},
                {"punched.delta", "double", "0"},
                {"punched.hole_side", "double", "0"},
                {"grid.h", "double", "0.015625"},
                {"eig.tol", "double", "1e-8"},
                {"eig.max_iter", "int", "200"}});
    add("rauch-taylor", {{"d", "int", "3"},
                         {"beta", "double", "0.15"},
                         {"r.list", "list", "8,16,32"},
                         {"n", "int", "1"},
                         {"grid.h", "double", "0"},
                         {"eig.tol", "double", "1e-8"},
                         {"eig.max_iter", "int", "200"}});
    add("mr-sweep", {{"d", "int", "2"},
                     {"theta", "double", "2"},
                     {"r.list", "list", "4,8,16,32"},
                     {"n.list", "list", "1"},
                     {"multipliers", "list", "1"},
                     {"grid.h", "double", "0"},
                     {"eig.tol", "double", "1e-8"},
                     {"eig.max_iter", "int", "200"}});
    add("survive", {{"method", "string", "mc"},
                    {"law.kind", "string", "power_tail"},
                    {"law.theta", "double", "2"},
                    {"d", "int", "2"},
                    {"t.grid", "list", "5,10,15,20"},
                    {"paths", "int", "10000"},
                    {"configs", "int", "1"},
                    {"dt", "double", "0.005"},
                    {"spec.epsilon", "double", "1"},
                    {"spec.L", "double", "1"},
                    {"spec.height", "double", "1"},
                    {"spec.t_side", "double", "20"},
                    {"proxy.grid_h", "double", "0.25"},
                    {"eig.tol", "double", "1e-8"},
                    {"eig.max_iter", "int", "200"}});
    add("scaling", {{"input.csv", "string", "survive.csv"},
                    {"d", "int", "2"},
                    {"fit.log_correction", "int", "0"}});
    add("densitybox", {{"law.kind", "string", "power_tail"},
                       {"law.theta", "double", "2"},
                       {"d", "int", "2"},
                       {"r", "double", "16"},
                       {"window.side", "double", "8"},
                       {"replicas", "int", "100"}});
    add("dos", {{"law.kind", "string", "power_tail"},
                {"law.theta", "double", "2"},
                {"d", "int", "2"},
                {"N", "double", "1"},
                {"lambda.max", "double", "30"},
                {"lambda.bins", "int", "24"},
                {"replicas", "int", "10"},
                {"k", "int", "16"},
                {"grid.h", "double", "0"},
                {"spec.height", "double", "1"},
                {"free", "int", "0"}});
    add("pp-converge", {{"d", "int", "2"},
                        {"theta.grid", "list", "0.05,0.1,0.5,1,2,4,8"},
                        {"box.side", "double", "1"},
                        {"trunc.radius", "double", "0"}});
    return s;
}

const std::map<std::string, Schema>& schemas() {
    static const std::map<std::string, Schema> s = build_schemas();
    return s;
}

struct Resolved {
    std::map<std::string, std::string> raw;
    double num(const std::string& k) const {
        auto it = raw.find(k);
        try {
            return std::stod(it->second);
        } catch (...) {
            throw std::invalid_argument("config field " + k + ": expected number, got '" +
                                        it->second + "'");
        }
    }
    int64_t integer(const std::string& k) const {
        auto it = raw.find(k);
        try {
            return std::stoll(it->second);
        } catch (...) {
            throw std::invalid_argument("config field " + k + ": expected integer, got '" +
                                        it->second + "'");
        }
    }
    std::string str(const std::string& k) const { return raw.at(k); }
    std::vector<double> list(const std::string& k) const {
        std::vector<double> out;
        std::istringstream ss(raw.at(k));
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) {
                try {
                    out.push_back(std::stod(tok));
                } catch (...) {
                    throw std::invalid_argument("config field " + k + ": bad list element '" + tok + "'");
                }
            }
        if (out.empty()) throw std::invalid_argument("config field " + k + ": empty list");
        return out;
    }
};

Resolved resolve(const ExperimentConfig& cfg) {
    auto it = schemas().find(cfg.kind);
    if (it == schemas().end())
        throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
    const Schema& sc = it->second;
    for (const auto& [k, v] : cfg.params) {
        (void)v;
        if (!sc.find(k))
            throw std::invalid_argument("experiment '" + cfg.kind + "': unknown config key '" + k + "'");
    }
    Resolved r;
    for (const auto& f : sc.fields) {
        auto pit = cfg.params.find(f.key);
        r.raw[f.key] = (pit != cfg.params.end()) ? pit->second : f.default_value;
    }
    return r;
}

void write_manifest(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    nlohmann::json j;
    j["kind"] = cfg.kind;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["artifact_version"] = kVersion;
    nlohmann::json params;
    for (const auto& [k, v] : r.raw) params[k] = v;
    j["params"] = params;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << j.dump(2) << "\n";
}

void write_plot(const fs::path& dir, const std::string& name, const std::string& body) {
    std::ofstream out(dir / (name + ".gp"));
    out << "# gnuplot script\n" << body;
}

DisplacementLaw law_from(const Resolved& r, int d) {
    DisplacementLaw law;
    law.kind = law_kind_from_name(r.str("law.kind"));
    law.theta = r.num("law.theta");
    law.d = d;
    return law;
}

Region region_from(const Resolved& r, int d) {
    std::string file = r.str("region.file");
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw std::invalid_argument("region.file: cannot open " + file);
        std::stringstream ss;
        ss << in.rdbuf();
        return Region::from_json(ss.str());
    }
    double side = r.num("region.side");
    return Region::box_union(d, {Box::cube(d, Pt{0, 0, 0}, side)});
}

// ------------------------------------------------------------ runners

void run_sample(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    int d = int(r.integer("d"));
    DisplacementLaw law = law_from(r, d);
    Box win = Box::cube(d, Pt{0, 0, 0}, r.num("window.side"));
    double trunc = r.num("trunc.radius");
    if (trunc <= 0) trunc = default_truncation_radius(law);
    PointConfiguration pc = sample_configuration(law, win, trunc, cfg.seed, 0);
    write_configuration_csv(pc, (dir / "points.csv").string(), (dir / "points.json").string());
    write_plot(dir, "points", "set size square\nplot 'points.csv' every ::1 using 2:3 with dots\n");
}

void run_emptiness(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    int d = int(r.integer("d"));
    DisplacementLaw law = law_from(r, d);
    Region W = region_from(r, d);
    double trunc = r.num("trunc.radius");
    if (trunc <= 0) trunc = default_truncation_radius(law);
    EmptinessOptions opts;
    opts.threads = cfg.threads;
    EmptinessResult er = emptiness_log_prob_exact(law, W, trunc, opts);
    double fn = hole_functional(W, law.theta, r.num("quad.resolution"));
    double bound = necessary_condition_log_bound(law, W);
    CsvWriter w((dir / "emptiness.csv").string(),
                "exact_log_prob,tail_bound,hole_functional,ratio,necessary_log_bound");
    w.row(er.exact_log_prob, er.tail_bound, fn, fn > 0 ? er.exact_log_prob / (-fn) : 0.0, bound);
    write_plot(dir, "emptiness", "# single-row result; see emptiness.csv\n");
}

void run_holefun(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    int d = int(r.integer("d"));
    Region W = region_from(r, d);
    double v = hole_functional(W, r.num("theta"), r.num("quad.resolution"));
    CsvWriter w((dir / "holefun.csv").string(), "theta,resolution,value,volume");
    w.row(r.num("theta"), r.num("quad.resolution"), v, region_volume(W));
    write_plot(dir, "holefun", "# single-row result; see holefun.csv\n");
}

void run_eig(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    int d = int(r.integer("d"));
    Region R = [&] {
        if (!r.str("region.file").empty()) return region_from(r, d);
        if (r.num("punched.delta") > 0) {
            PunchedDomainSpec spec{int(r.integer("punched.n")), r.num("punched.delta"),
                                   r.num("punched.hole_side"), d};
            return build_punched_region(spec);
        }
        return Region::box_union(d, {Box::cube(d, Pt{0, 0, 0}, 2.0)});
    }();
    EigOptions eo;
    eo.tol = r.num("eig.tol");
    eo.max_iter = int(r.integer("eig.max_iter"));
    GridOperator op = assemble(R, nullptr, r.num("grid.h"));
    SpectralResult sr = principal_eigenvalue(op, eo);
    CsvWriter w((dir / "eig.csv").string(), "lambda1,residual,iterations,cells,h");
    w.row(sr.lambda1, sr.residual, sr.iterations, op.n, op.h);
    write_plot(dir, "eig", "# single-row result; see eig.csv\n");
}

void run_rauch_taylor(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    EigOptions eo;
    eo.tol = r.num("eig.tol");
    eo.max_iter = int(r.integer("eig.max_iter"));
    auto res = rauch_taylor_sweep(int(r.integer("d")), r.num("beta"), r.list("r.list"),
                                  int(r.integer("n")), r.num("grid.h"), eo);
    std::vector<SweepRow> rows = res.subcritical;
    rows.insert(rows.end(), res.supercritical.begin(), res.supercritical.end());
    write_sweep_csv(rows, (dir / "rauch_taylor.csv").string());
    write_plot(dir, "rauch_taylor",
               "set logscale x 2\nplot 'rauch_taylor.csv' every ::1 using 1:5 with linespoints\n");
}

void run_mr_sweep(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    EigOptions eo;
    eo.tol = r.num("eig.tol");
    eo.max_iter = int(r.integer("eig.max_iter"));
    int d = int(r.integer("d"));
    double theta = r.num("theta");
    std::vector<int> ns;
    for (double v : r.list("n.list")) ns.push_back(int(v));
    std::vector<SweepRow> rows;
    for (double rr : r.list("r.list")) {
        MrResult mr = mr_optimize(d, theta, rr, ns, r.list("multipliers"), r.num("grid.h"), eo);
        for (const auto& pt : mr.landscape) {
            SweepRow row;
            row.r = rr;
            row.delta_over_critical = pt.multiplier;
            row.n = pt.n;
            row.h = pt.fv.h;
            row.lambda1 = pt.fv.lambda1;
            row.residual = pt.fv.residual;
            row.iterations = pt.fv.iterations;
            row.functional = pt.fv.functional;
            row.m_value = pt.fv.value;
            rows.push_back(row);
        }
    }
    write_sweep_csv(rows, (dir / "mr_sweep.csv").string());
    write_plot(dir, "mr_sweep",
               "set logscale x 2\nplot 'mr_sweep.csv' every ::1 using 1:9 with points\n");
}

void run_survive(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    int d = int(r.integer("d"));
    DisplacementLaw law = law_from(r, d);
    PotentialSpec spec;
    spec.d = d;
    spec.epsilon = r.num("spec.epsilon");
    spec.L = r.num("spec.L");
    spec.height = r.num("spec.height");
    spec.t_side = r.num("spec.t_side");
    std::vector<double> ts = r.list("t.grid");
    std::string method = r.str("method");
    std::vector<SurvivalEstimate> rows;
    if (method == "mc") {
        AnnealedResult res = annealed_survival(law, spec, ts, r.integer("configs"),
                                               r.integer("paths"), r.num("dt"), cfg.seed,
                                               McOptions{cfg.threads});
        rows = res.estimates;
    } else if (method == "proxy") {
        ProxyOptions po;
        po.grid_h = r.num("proxy.grid_h");
        po.eig.tol = r.num("eig.tol");
        po.eig.max_iter = int(r.integer("eig.max_iter"));
        po.threads = cfg.threads;
        ProxyResult res = eigen_proxy_annealed(law, spec, ts, r.integer("configs"), cfg.seed, po);
        rows = res.estimates;
    } else {
        throw std::invalid_argument("survive: method must be mc or proxy");
    }
    write_survival_csv(rows, (dir / "survive.csv").string());
    write_plot(dir, "survive",
               "set logscale y\nplot 'survive.csv' every ::1 using 1:2 with linespoints\n");
}

void run_scaling(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    (void)cfg;
    auto rows = read_survival_csv(r.str("input.csv"));
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : rows)
        if (e.value > 0) pts.push_back({e.t, e.log_value});
    ScalingFit fit = scaling_fit(pts, int(r.integer("d")), r.integer("fit.log_correction") != 0);
    std::ofstream out(dir / "scaling.json");
    out << scaling_fit_json(fit) << "\n";
    write_plot(dir, "scaling", "# fit report in scaling.json\n");
}

void run_densitybox(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    int d = int(r.integer("d"));
    DisplacementLaw law = law_from(r, d);
    CoarseGrainParams p = default_params(d, r.num("law.theta"), r.num("r"));
    Box win = Box::cube(d, Pt{0, 0, 0}, r.num("window.side"));
    auto rows = nondensity_statistics(law, p, win, r.integer("replicas"), cfg.seed, cfg.threads);
    write_nondensity_csv(rows, (dir / "densitybox.csv").string());
    write_plot(dir, "densitybox",
               "plot 'densitybox.csv' every ::1 using 1:($5/$4) with points\n");
}

void run_dos(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    int d = int(r.integer("d"));
    PotentialSpec spec;
    spec.d = d;
    spec.height = r.num("spec.height");
    DosOptions opts;
    opts.k = int(r.integer("k"));
    opts.grid_h = r.num("grid.h");
    opts.threads = cfg.threads;
    double N = r.num("N");
    int bins = int(r.integer("lambda.bins"));
    double lmax = r.num("lambda.max");
    std::vector<double> grid;
    for (int i = 1; i <= bins; ++i) grid.push_back(lmax * double(i) / double(bins));
    DosHistogram hist;
    if (r.integer("free") != 0) {
        hist = ids_free(spec, N, grid, opts);
    } else {
        DisplacementLaw law = law_from(r, d);
        hist = ids_estimate(law, spec, N, grid, r.integer("replicas"), cfg.seed, opts);
    }
    write_dos_csv(hist, (dir / "dos.csv").string());
    LifshitzFit fit = lifshitz_fit(hist, d, r.num("law.theta"));
    nlohmann::json j;
    j["sufficient"] = fit.sufficient;
    j["slope"] = fit.slope;
    j["slope_ci"] = fit.slope_ci;
    j["target"] = fit.target;
    j["bins_used"] = fit.bins_used;
    j["note"] = fit.note;
    std::ofstream out(dir / "lifshitz.json");
    out << j.dump(2) << "\n";
    write_plot(dir, "dos", "plot 'dos.csv' every ::1 using 1:2 with steps\n");
}

void run_pp_converge(const ExperimentConfig& cfg, const Resolved& r, const fs::path& dir) {
    int d = int(r.integer("d"));
    double side = r.num("box.side");
    Region B = Region::box_union(d, {Box::cube(d, Pt{0, 0, 0}, side)});
    double volB = std::pow(side, d);

    // uniform-ball reference value (exact product formula)
    DisplacementLaw ball{LawKind::uniform_ball, 0.0, d};
    EmptinessOptions opts;
    opts.threads = cfg.threads;
    double ball_log = emptiness_log_prob_exact(ball, B, 3.0, opts).exact_log_prob;

    CsvWriter w((dir / "pp_converge.csv").string(),
                "theta,exact_log_prob,tail_bound,poisson_log,uniform_ball_log");
    for (double theta : r.list("theta.grid")) {
        DisplacementLaw law{LawKind::power_tail, theta, d};
        double trunc = r.num("trunc.radius");
        if (trunc <= 0) trunc = default_truncation_radius(law);
        EmptinessResult er = emptiness_log_prob_exact(law, B, trunc, opts);
        w.row(theta, er.exact_log_prob, er.tail_bound, -volB, ball_log);
    }
    write_plot(dir, "pp_converge",
               "set logscale x\nplot 'pp_converge.csv' every ::1 using 1:2 with linespoints, "
               "'' every ::1 using 1:4 with lines, '' every ::1 using 1:5 with lines\n");
}

} // namespace

std::vector<std::string> known_experiment_kinds() {
    std::vector<std::string> out;
    for (const auto& [k, v] : schemas()) {
        (void)v;
        out.push_back(k);
    }
    return out;
}

double scale_for_t(int d, double theta, double t) {
    if (!(theta > 0)) throw std::invalid_argument("scale_for_t: theta must be positive");
    if (!(t > std::exp(1.0))) throw std::invalid_argument("scale_for_t: t must exceed e");
    if (d >= 3) {
        double dd = double(d);
        return std::pow(t, dd / (dd * dd + 2.0 * dd + 2.0 * theta));
    }
    if (d != 2) throw std::invalid_argument("scale_for_t: d must be 2 or 3");
    // solve (4+theta) log r - (theta/2) log log r = log t for log r
    double logt = std::log(t);
    double x = logt / (4.0 + theta) + 0.5;  // log r, rough start
    for (int it = 0; it < 200; ++it) {
        double f = (4.0 + theta) * x - 0.5 * theta * std::log(x) - logt;
        double fp = (4.0 + theta) - 0.5 * theta / x;
        double step = f / fp;
        x -= step;
        if (x < 1e-6) x = 1e-6;
        if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(x))) break;
    }
    return std::exp(x);
}

std::vector<FieldSpec> experiment_schema(const std::string& kind) {
    auto it = schemas().find(kind);
    if (it == schemas().end()) throw std::invalid_argument("unknown experiment kind " + kind);
    return it->second.fields;
}

void run_experiment(const ExperimentConfig& cfg) {
    Resolved r = resolve(cfg);
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_manifest(cfg, r, dir);
    if (cfg.kind == "sample") run_sample(cfg, r, dir);
    else if (cfg.kind == "emptiness") run_emptiness(cfg, r, dir);
    else if (cfg.kind == "holefun") run_holefun(cfg, r, dir);
    else if (cfg.kind == "eig") run_eig(cfg, r, dir);
    else if (cfg.kind == "rauch-taylor") run_rauch_taylor(cfg, r, dir);
    else if (cfg.kind == "mr-sweep") run_mr_sweep(cfg, r, dir);
    else if (cfg.kind == "survive") run_survive(cfg, r, dir);
    else if (cfg.kind == "scaling") run_scaling(cfg, r, dir);
    else if (cfg.kind == "densitybox") run_densitybox(cfg, r, dir);
    else if (cfg.kind == "dos") run_dos(cfg, r, dir);
    else if (cfg.kind == "pp-converge") run_pp_converge(cfg, r, dir);
    else throw std::invalid_argument("unknown experiment kind " + cfg.kind);
}

} // namespace pltrap
