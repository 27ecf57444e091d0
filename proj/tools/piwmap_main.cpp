#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "piw/asymptotics.hpp"
#include "piw/csv_io.hpp"
#include "piw/errors.hpp"
#include "piw/mapest.hpp"
#include "piw/matcore.hpp"
#include "piw/piwprior.hpp"
#include "piw/shapelab.hpp"
#include "piw/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double parse_real(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw piw::InvalidInput(std::string("invalid number for ") + what + ": " + s);
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(s);
    while (std::getline(ss, field, sep)) out.push_back(field);
    return out;
}

// "a:b:step" inclusive sweep, or a plain comma list.
std::vector<double> parse_grid(const std::string& s, const char* what) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        if (parts.size() != 3) throw piw::InvalidInput(std::string(what) + ": expected a:b:step");
        const double a = parse_real(parts[0], what);
        const double b = parse_real(parts[1], what);
        const double step = parse_real(parts[2], what);
        if (!(step > 0.0) || b < a)
            throw piw::InvalidInput(std::string(what) + ": need a <= b and step > 0");
        const int count = static_cast<int>((b - a) / step + 1e-9) + 1;
        for (int i = 0; i < count; ++i) out.push_back(a + i * step);
    } else {
        for (const auto& f : split(s, ',')) out.push_back(parse_real(f, what));
    }
    if (out.empty()) throw piw::InvalidInput(std::string(what) + ": empty grid");
    return out;
}

// "3-10,20" -> {3,...,10,20}
std::vector<int> parse_index_list(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const auto& piece : split(s, ',')) {
        const auto dash = piece.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoi(piece));
            } else {
                const int a = std::stoi(piece.substr(0, dash));
                const int b = std::stoi(piece.substr(dash + 1));
                if (b < a) throw std::invalid_argument(piece);
                for (int i = a; i <= b; ++i) out.push_back(i);
            }
        } catch (const std::exception&) {
            throw piw::InvalidInput(std::string(what) + ": bad index range: " + piece);
        }
    }
    if (out.empty()) throw piw::InvalidInput(std::string(what) + ": empty index list");
    return out;
}

std::vector<std::pair<int, int>> parse_cells(const std::string& s) {
    std::vector<std::pair<int, int>> out;
    if (s.empty()) return out;
    for (const auto& piece : split(s, ',')) {
        const auto x = piece.find('x');
        try {
            if (x == std::string::npos) throw std::invalid_argument(piece);
            out.emplace_back(std::stoi(piece.substr(0, x)), std::stoi(piece.substr(x + 1)));
        } catch (const std::exception&) {
            throw piw::InvalidInput("cells: expected PxN entries, got: " + piece);
        }
    }
    return out;
}

double resolve_m(const std::string& m_flag, int p) {
    if (m_flag == "auto") return p;
    return parse_real(m_flag, "--m");
}

ordered_json jvec(const piw::Vector& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

ordered_json jvec(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(x);
    return a;
}

ordered_json jvec(const std::vector<int>& v) {
    ordered_json a = ordered_json::array();
    for (int x : v) a.push_back(x);
    return a;
}

ordered_json jmat(const piw::Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(jvec(piw::Vector(m.row(i))));
    return rows;
}

// Output sink: artifacts land in --out, plus a manifest tying them to the
// exact invocation. No timestamps anywhere, so identical invocations produce
// byte-identical files.
struct Sink {
    std::string dir = ".";
    ordered_json manifest;
    std::vector<std::string> outputs;

    Sink(int argc, char** argv, const std::string& sub, const std::string& out_dir) : dir(out_dir) {
        std::string joined;
        ordered_json cmd = ordered_json::array();
        for (int i = 0; i < argc; ++i) {
            cmd.push_back(argv[i]);
            joined += argv[i];
            joined += '\x1f';
        }
        manifest["tool"] = "piwmap";
        manifest["version"] = kVersion;
        manifest["command"] = std::move(cmd);
        manifest["subcommand"] = sub;
        manifest["config_digest"] = hex64(fnv1a64(joined));
    }

    void write_text(const std::string& name, const std::string& text) {
        fs::create_directories(dir);
        const auto p = fs::path(dir) / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw piw::InvalidInput("cannot open output file: " + p.string());
        f << text;
        outputs.push_back(name);
    }
    void write_json(const std::string& name, const ordered_json& j) {
        write_text(name, j.dump(2) + "\n");
    }
    void finish() {
        manifest["outputs"] = outputs;
        fs::create_directories(dir);
        const auto p = fs::path(dir) / "manifest.json";
        std::ofstream f(p, std::ios::binary);
        if (!f) throw piw::InvalidInput("cannot open output file: " + p.string());
        f << manifest.dump(2) << "\n";
        std::cout << "wrote " << outputs.size() + 1 << " files to " << dir << "\n";
    }
};

piw::SymPD psi_from_spec(const std::string& spec, int p) {
    if (spec == "identity")
        return piw::SymPD(piw::Matrix::Identity(p, p), piw::SymPD::Strictness::Strict);
    if (spec.rfind("ar1:", 0) == 0) {
        const double rho = parse_real(spec.substr(4), "--psi ar1 parameter");
        if (p % 2 != 0)
            throw piw::InvalidInput("--psi ar1: requires an even number of data columns");
        return piw::build_ar1_block_psi(rho, p / 2, 1.0);
    }
    piw::Matrix psi = piw::read_matrix_csv(spec);
    if (psi.rows() != p || psi.cols() != p)
        throw piw::DimensionError("--psi: scale matrix does not match data dimension");
    return piw::SymPD(psi, piw::SymPD::Strictness::Strict);
}

ordered_json estimator_json(const piw::EstimatorDesc& e) {
    ordered_json j;
    switch (e.kind) {
        case piw::EstimatorDesc::Kind::Mle:
            j["kind"] = "mle";
            break;
        case piw::EstimatorDesc::Kind::Linear:
            j["kind"] = "linear";
            j["a"] = e.a;
            j["b"] = e.b;
            break;
        case piw::EstimatorDesc::Kind::Piw:
            j["kind"] = "piw";
            j["q"] = e.q;
            j["floor"] = e.floor;
            j["shrink_factor"] = e.shrink_factor;
            break;
    }
    return j;
}

ordered_json risk_json(const piw::RiskReport& r) {
    ordered_json j;
    j["scenario"] = r.scenario_kind == piw::ScenarioKind::Identity ? "identity" : "spiked";
    j["p"] = r.p;
    j["n"] = r.n;
    j["estimator"] = estimator_json(r.estimator);
    j["reps"] = r.reps;
    j["seed"] = r.seed;
    j["risk_mc"] = r.risk_mc;
    j["mc_stderr"] = r.mc_stderr;
    if (r.risk_analytic) j["risk_analytic"] = *r.risk_analytic;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MAP covariance estimation under power inverse Wishart priors"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "MAP covariance estimate from a data CSV");
    std::string est_input, est_m = "auto", est_psi, est_out = ".";
    int est_q = 2;
    double est_alpha = 1.0, est_tol = 1e-13;
    est->add_option("--input", est_input, "n x p data CSV, rows = observations")->required();
    est->add_option("--q", est_q, "prior power (integer >= 1)");
    est->add_option("--m", est_m, "prior degrees of freedom, or 'auto' for m = p");
    auto* est_alpha_opt = est->add_option("--alpha", est_alpha, "scalar scale: Psi = alpha I");
    auto* est_psi_opt =
        est->add_option("--psi", est_psi, "scale matrix: CSV path, ar1:RHO, or identity");
    est_alpha_opt->excludes(est_psi_opt);
    est->add_option("--tol", est_tol, "eigenvalue-equation tolerance");
    est->add_option("--out", est_out, "output directory");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo risk of one estimator/scenario cell");
    std::string sim_scenario = "identity", sim_estimator = "piw", sim_out = ".";
    int sim_p = 10, sim_n = 20, sim_q = 2, sim_reps = 2000, sim_threads = 0;
    double sim_floor = 1.0, sim_sf = 1.0, sim_a = 1.0, sim_b = 0.0;
    std::uint64_t sim_seed = 0;
    sim->add_option("--scenario", sim_scenario)
        ->check(CLI::IsMember({"identity", "spiked"}));
    sim->add_option("--p", sim_p)->required();
    sim->add_option("--n", sim_n)->required();
    sim->add_option("--estimator", sim_estimator)->check(CLI::IsMember({"piw", "mle", "linear"}));
    sim->add_option("--q", sim_q);
    sim->add_option("--floor", sim_floor);
    sim->add_option("--shrink-factor", sim_sf);
    sim->add_option("--a", sim_a, "linear estimator slope");
    sim->add_option("--b", sim_b, "linear estimator intercept");
    sim->add_option("--reps", sim_reps);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--threads", sim_threads);
    sim->add_option("--out", sim_out);

    // tables
    auto* tab = app.add_subcommand("tables", "reproduce the risk tables");
    std::string tab_cells, tab_out = ".";
    int tab_which = 0, tab_reps = 2000, tab_threads = 0;
    std::uint64_t tab_seed = 0;
    tab->add_option("--which", tab_which, "1 = exact MLE risks, 2 = identity, 3 = spiked")
        ->required()
        ->check(CLI::Range(1, 3));
    tab->add_option("--cells", tab_cells, "restrict to PxN cells, e.g. 10x5,50x50");
    tab->add_option("--reps", tab_reps);
    tab->add_option("--seed", tab_seed);
    tab->add_option("--threads", tab_threads);
    tab->add_option("--out", tab_out);

    // asymptotics
    auto* asy = app.add_subcommand("asymptotics", "largest-eigenvalue matching experiment");
    std::string asy_m = "auto", asy_out = ".";
    int asy_p = 100, asy_n = 100, asy_q = 2, asy_reps = 1000, asy_threads = 0;
    double asy_alpha = 1.0;
    std::uint64_t asy_seed = 0;
    asy->add_option("--p", asy_p)->required();
    asy->add_option("--n", asy_n)->required();
    asy->add_option("--q", asy_q);
    asy->add_option("--m", asy_m, "prior degrees of freedom, or 'auto' for m = p");
    asy->add_option("--alpha", asy_alpha);
    asy->add_option("--reps", asy_reps);
    asy->add_option("--seed", asy_seed);
    asy->add_option("--threads", asy_threads);
    asy->add_option("--out", asy_out);

    // ratio-curves
    auto* rat = app.add_subcommand("ratio-curves",
                                   "log density ratio of the power prior to the inverse Wishart");
    std::string rat_out = ".";
    int rat_q = 2, rat_points = 256;
    double rat_mq = 1.0, rat_m1 = 1.0, rat_lmin = 0.05, rat_lmax = 3.0;
    rat->add_option("--q", rat_q);
    rat->add_option("--m-q", rat_mq, "degrees of freedom of the power prior");
    rat->add_option("--m-1", rat_m1, "degrees of freedom of the inverse Wishart");
    rat->add_option("--lmin", rat_lmin);
    rat->add_option("--lmax", rat_lmax);
    rat->add_option("--points", rat_points);
    rat->add_option("--out", rat_out);

    // fit-shapes
    auto* fit = app.add_subcommand("fit-shapes", "MAP fit of a landmark dataset");
    std::string fit_input, fit_m = "auto", fit_out = ".";
    std::vector<std::string> fit_exclude;
    int fit_q = 2;
    double fit_rho = 0.0, fit_alpha = 1.0;
    fit->add_option("--input", fit_input, "landmark CSV, one shape per row")->required();
    fit->add_option("--exclude", fit_exclude, "shape ids to drop")->take_all();
    fit->add_option("--rho", fit_rho, "AR(1) correlation of the prior scale")->required();
    fit->add_option("--alpha", fit_alpha, "prior scale multiplier")->required();
    fit->add_option("--q", fit_q);
    fit->add_option("--m", fit_m);
    fit->add_option("--out", fit_out);

    // predict
    auto* prd = app.add_subcommand("predict", "EBLUP prediction of missing landmark coordinates");
    std::string prd_input, prd_target, prd_missing, prd_m = "auto", prd_estimator = "map",
                prd_out = ".";
    std::vector<std::string> prd_exclude;
    int prd_q = 2;
    double prd_rho = 0.0, prd_alpha = 1.0;
    prd->add_option("--input", prd_input)->required();
    prd->add_option("--exclude", prd_exclude)->take_all();
    prd->add_option("--target", prd_target, "row id of the shape to predict")->required();
    prd->add_option("--missing", prd_missing, "missing coordinate indices, e.g. 3-10,20")
        ->required();
    prd->add_option("--estimator", prd_estimator)->check(CLI::IsMember({"map", "mle"}));
    prd->add_option("--rho", prd_rho)->required();
    prd->add_option("--alpha", prd_alpha)->required();
    prd->add_option("--q", prd_q);
    prd->add_option("--m", prd_m);
    prd->add_option("--out", prd_out);

    // cv
    auto* cv = app.add_subcommand("cv", "cross-validate the prior over a (rho, alpha) grid");
    std::string cv_input, cv_rho_grid, cv_alpha_grid, cv_m = "auto", cv_out = ".";
    std::vector<std::string> cv_exclude;
    int cv_q = 2;
    cv->add_option("--input", cv_input)->required();
    cv->add_option("--exclude", cv_exclude)->take_all();
    cv->add_option("--rho-grid", cv_rho_grid, "a:b:step or comma list")->required();
    cv->add_option("--alpha-grid", cv_alpha_grid, "a:b:step or comma list")->required();
    cv->add_option("--q", cv_q);
    cv->add_option("--m", cv_m);
    cv->add_option("--out", cv_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*est) {
            Sink sink(argc, argv, "estimate", est_out);
            piw::Matrix x = piw::read_matrix_csv(est_input);
            const int p = static_cast<int>(x.cols());
            const int n = static_cast<int>(x.rows());
            auto [mean, s] = piw::sample_covariance(x);
            const double m = resolve_m(est_m, p);

            std::optional<piw::PiwPrior> prior;
            ordered_json scale;
            if (est_psi_opt->count() > 0) {
                prior.emplace(psi_from_spec(est_psi, p), m, est_q);
                scale["kind"] = "matrix";
                scale["spec"] = est_psi;
            } else {
                prior.emplace(piw::PiwPrior::scalar(p, est_alpha, m, est_q));
                scale["kind"] = "scalar";
                scale["alpha"] = est_alpha;
            }
            piw::MapSolution sol = piw::piw_map(s, n, *prior, est_tol);

            ordered_json j;
            j["n"] = n;
            j["p"] = p;
            j["q"] = est_q;
            j["m"] = m;
            j["scale"] = scale;
            j["mean"] = jvec(mean);
            j["sigma_hat"] = jmat(sol.sigma_hat.mat());
            j["eigen_s"] = jvec(sol.eigen_s);
            j["eigen_map"] = jvec(sol.eigen_map);
            j["residuals"] = jvec(sol.residuals);
            j["solver_iterations"] = jvec(sol.solver_iterations);
            if (prior->alpha) {
                const piw::FloorShrink fsh = piw::floor_shrink(*prior, n);
                j["floor"] = fsh.floor;
                j["shrink"] = fsh.shrink;
            }
            sink.write_json("estimate.json", j);
            sink.finish();
        } else if (*sim) {
            Sink sink(argc, argv, "simulate", sim_out);
            const piw::Scenario sc = sim_scenario == "identity"
                                         ? piw::make_identity_scenario(sim_p, sim_n)
                                         : piw::make_spiked_scenario(sim_p, sim_n);
            piw::EstimatorDesc ed = piw::EstimatorDesc::mle();
            if (sim_estimator == "piw") ed = piw::EstimatorDesc::piw(sim_q, sim_floor, sim_sf);
            if (sim_estimator == "linear") ed = piw::EstimatorDesc::linear(sim_a, sim_b);
            const piw::RiskReport r = piw::mc_risk(sc, ed, sim_reps, sim_seed, sim_threads);

            ordered_json j = risk_json(r);
            if (sc.sigma2) j["sigma2"] = *sc.sigma2;
            sink.manifest["master_seed"] = sim_seed;
            sink.manifest["reps"] = sim_reps;
            sink.manifest["threads"] = sim_threads;
            sink.write_json("simulate.json", j);
            sink.finish();
        } else if (*tab) {
            Sink sink(argc, argv, "tables", tab_out);
            const piw::TableResult tr =
                piw::reproduce_tables(tab_which, parse_cells(tab_cells), tab_reps, tab_seed,
                                      tab_threads);

            ordered_json j;
            j["which"] = tr.which;
            j["reps"] = tr.reps;
            j["master_seed"] = tr.master_seed;
            if (tab_which == 1) {
                ordered_json rows = ordered_json::array();
                for (const auto& e : tr.analytic)
                    rows.push_back({{"p", e.p}, {"n", e.n}, {"risk_analytic", e.risk}});
                j["cells"] = std::move(rows);
            } else {
                ordered_json qs = ordered_json::array();
                for (const auto& [pn, L] : tr.quantiles)
                    qs.push_back({{"p", pn.first}, {"n", pn.second}, {"L", L}});
                j["quantiles"] = std::move(qs);
                ordered_json rows = ordered_json::array();
                for (const auto& c : tr.cells) {
                    ordered_json e;
                    e["p"] = c.p;
                    e["n"] = c.n;
                    e["q"] = c.q;
                    e["floor"] = c.floor;
                    e["shrink_factor"] = c.shrink_factor;
                    e["estimator"] = estimator_json(c.report.estimator);
                    e["cell_seed"] = c.cell_seed;
                    e["L"] = c.L;
                    if (c.matched_linear) e["a_prime"] = c.a_prime;
                    e["risk_mc"] = c.report.risk_mc;
                    e["mc_stderr"] = c.report.mc_stderr;
                    if (c.report.risk_analytic) e["risk_analytic"] = *c.report.risk_analytic;
                    e["min_in_row"] = c.min_in_row;
                    e["min_in_block"] = c.min_in_block;
                    rows.push_back(std::move(e));
                }
                j["cells"] = std::move(rows);
            }
            const std::string stem = "table" + std::to_string(tab_which);
            sink.write_json(stem + ".json", j);
            sink.write_text(stem + ".csv", piw::table_layout_csv(tr));

            sink.manifest["master_seed"] = tab_seed;
            sink.manifest["reps"] = tab_reps;
            sink.manifest["threads"] = tab_threads;
            ordered_json mcells = ordered_json::array();
            for (const auto& c : tr.cells) {
                ordered_json e;
                e["p"] = c.p;
                e["n"] = c.n;
                e["q"] = c.q;
                e["floor"] = c.floor;
                e["shrink_factor"] = c.shrink_factor;
                e["seed"] = c.cell_seed;
                e["L"] = c.L;
                if (c.matched_linear) e["a_prime"] = c.a_prime;
                mcells.push_back(std::move(e));
            }
            sink.manifest["cells"] = std::move(mcells);
            sink.finish();
        } else if (*asy) {
            Sink sink(argc, argv, "asymptotics", asy_out);
            const double m = resolve_m(asy_m, asy_p);
            const piw::AsymptoticFrame frame = piw::make_frame(asy_n, asy_p, asy_q, m);
            const piw::TwReport rep = piw::tw_matching_experiment(asy_p, asy_n, asy_q, m,
                                                                  asy_alpha, asy_reps, asy_seed,
                                                                  asy_threads);
            ordered_json j;
            j["p"] = asy_p;
            j["n"] = asy_n;
            j["q"] = asy_q;
            j["m"] = m;
            j["alpha"] = asy_alpha;
            j["reps"] = asy_reps;
            j["seed"] = asy_seed;
            j["mu_np"] = frame.mu;
            j["sigma_np"] = frame.sigma;
            j["gamma"] = frame.gamma;
            j["kappa"] = frame.kappa;
            j["predicted_limit"] = piw::predicted_limit(frame.gamma, frame.kappa, asy_q);
            j["ks_distance"] = rep.ks;
            j["mean_lmax_map"] = rep.mean_lmax_map;
            sink.manifest["master_seed"] = asy_seed;
            sink.manifest["reps"] = asy_reps;
            sink.manifest["threads"] = asy_threads;
            sink.write_json("asymptotics.json", j);
            sink.finish();
        } else if (*rat) {
            Sink sink(argc, argv, "ratio-curves", rat_out);
            if (rat_points < 2) throw piw::InvalidInput("--points: need at least 2");
            if (!(rat_lmin > 0.0) || !(rat_lmax > rat_lmin))
                throw piw::InvalidInput("--lmin/--lmax: need 0 < lmin < lmax");
            std::vector<double> grid(static_cast<std::size_t>(rat_points));
            for (int i = 0; i < rat_points; ++i)
                grid[static_cast<std::size_t>(i)] =
                    rat_lmin + (rat_lmax - rat_lmin) * i / (rat_points - 1);
            const std::vector<double> lr =
                piw::log_density_ratio_curve(rat_q, rat_mq, rat_m1, grid);
            std::ostringstream csv;
            csv << "lambda,log_ratio\n";
            for (std::size_t i = 0; i < grid.size(); ++i)
                csv << piw::format_double(grid[i]) << ',' << piw::format_double(lr[i]) << '\n';
            sink.write_text("ratio_curves.csv", csv.str());
            sink.finish();
        } else if (*fit) {
            Sink sink(argc, argv, "fit-shapes", fit_out);
            const piw::ShapeDataset ds = piw::load_shapes_csv(fit_input, fit_exclude);
            const double m = resolve_m(fit_m, ds.p());
            const piw::SymPD psi = piw::build_ar1_block_psi(fit_rho, ds.p() / 2, fit_alpha);
            const piw::PiwPrior prior(psi, m, fit_q);
            const piw::FitReport rep = piw::summarize_fit(ds, prior);

            ordered_json j;
            j["n"] = ds.n();
            j["p"] = ds.p();
            j["point_count"] = ds.point_count;
            j["excluded_ids"] = ds.excluded_ids;
            j["rho"] = fit_rho;
            j["alpha"] = fit_alpha;
            j["q"] = fit_q;
            j["m"] = m;
            j["beta"] = rep.beta;
            j["gamma"] = rep.gamma;
            j["trace_map"] = rep.trace_map;
            j["trace_mle"] = rep.trace_mle;
            j["mean"] = jvec(rep.mean);
            j["variances"] = jvec(rep.variances);
            j["floor_curve"] = jvec(rep.floor_curve);
            j["cap_curve"] = jvec(rep.cap_curve);
            j["eigenvalues"] = jvec(rep.eigenvalues);
            sink.write_json("fit_shapes.json", j);
            sink.write_text("fit_sigma_map.csv", [&] {
                std::ostringstream os;
                piw::write_matrix_csv(os, rep.sigma_map);
                return os.str();
            }());
            sink.write_text("fit_sigma_mle.csv", [&] {
                std::ostringstream os;
                piw::write_matrix_csv(os, rep.sigma_mle);
                return os.str();
            }());
            sink.write_text("fit_correlation.csv", [&] {
                std::ostringstream os;
                piw::write_matrix_csv(os, rep.correlation);
                return os.str();
            }());
            sink.write_text("fit_eigenvectors.csv", [&] {
                std::ostringstream os;
                piw::write_matrix_csv(os, rep.leading_eigenvectors);
                return os.str();
            }());
            sink.finish();
        } else if (*prd) {
            Sink sink(argc, argv, "predict", prd_out);
            const piw::ShapeDataset ds = piw::load_shapes_csv(prd_input, prd_exclude);
            int target = -1;
            for (std::size_t i = 0; i < ds.ids.size(); ++i)
                if (ds.ids[i] == prd_target) target = static_cast<int>(i);
            if (target < 0) throw piw::InvalidInput("predict: no row with id " + prd_target);
            const int p = ds.p();
            const int n = ds.n();
            if (n < 3) throw piw::InsufficientData("predict: need at least 3 shapes");

            piw::Matrix train(n - 1, p);
            int t = 0;
            for (int i = 0; i < n; ++i)
                if (i != target) train.row(t++) = ds.data.row(i);
            auto [mean, s] = piw::sample_covariance(train);

            const double m = resolve_m(prd_m, p);
            piw::SymPD sigma = s;
            if (prd_estimator == "map") {
                const piw::SymPD psi = piw::build_ar1_block_psi(prd_rho, p / 2, prd_alpha);
                sigma = piw::piw_map(s, n - 1, piw::PiwPrior(psi, m, prd_q)).sigma_hat;
            }

            const std::vector<int> missing = parse_index_list(prd_missing, "--missing");
            std::vector<bool> is_missing(static_cast<std::size_t>(p), false);
            for (int idx : missing) {
                if (idx < 0 || idx >= p)
                    throw piw::InvalidInput("--missing: index out of range");
                is_missing[static_cast<std::size_t>(idx)] = true;
            }
            std::vector<int> observed;
            for (int i = 0; i < p; ++i)
                if (!is_missing[static_cast<std::size_t>(i)]) observed.push_back(i);
            piw::Vector x_obs(static_cast<Eigen::Index>(observed.size()));
            for (std::size_t i = 0; i < observed.size(); ++i)
                x_obs[static_cast<Eigen::Index>(i)] = ds.data(target, observed[i]);

            const piw::Vector pred = piw::eblup_predict(mean, sigma, observed, x_obs);
            piw::Vector actual(pred.size());
            std::vector<int> missing_sorted;
            for (int i = 0; i < p; ++i)
                if (is_missing[static_cast<std::size_t>(i)]) missing_sorted.push_back(i);
            for (std::size_t i = 0; i < missing_sorted.size(); ++i)
                actual[static_cast<Eigen::Index>(i)] = ds.data(target, missing_sorted[i]);

            ordered_json j;
            j["target"] = prd_target;
            j["estimator"] = prd_estimator;
            j["rho"] = prd_rho;
            j["alpha"] = prd_alpha;
            j["q"] = prd_q;
            j["m"] = m;
            j["missing"] = jvec(missing_sorted);
            j["predicted"] = jvec(pred);
            j["actual"] = jvec(actual);
            j["rmse"] = std::sqrt((pred - actual).squaredNorm() / pred.size());
            sink.write_json("predict.json", j);
            sink.finish();
        } else if (*cv) {
            Sink sink(argc, argv, "cv", cv_out);
            const piw::ShapeDataset ds = piw::load_shapes_csv(cv_input, cv_exclude);
            const double m = cv_m == "auto" ? -1.0 : parse_real(cv_m, "--m");
            const piw::CvResult res =
                piw::cv_grid_search(ds, parse_grid(cv_rho_grid, "--rho-grid"),
                                    parse_grid(cv_alpha_grid, "--alpha-grid"), cv_q, m);
            ordered_json j;
            j["rho_star"] = res.rho_star;
            j["alpha_star"] = res.alpha_star;
            ordered_json table = ordered_json::array();
            for (const auto& e : res.table)
                table.push_back({{"rho", e.rho}, {"alpha", e.alpha}, {"score", e.score}});
            j["table"] = std::move(table);
            sink.write_json("cv.json", j);
            sink.finish();
        }
    } catch (const piw::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const piw::Error& e) {
        std::cerr << "numerical contract violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
