// Command-line front end: build-net, covmat, estimate, simulate, krige,
// extremes, bench. Every command is a pure function of (inputs, flags,
// seed); reruns produce byte-identical artifacts.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flownet/bench.hpp"
#include "flownet/covariance.hpp"
#include "flownet/estimator.hpp"
#include "flownet/extremes.hpp"
#include "flownet/fields.hpp"
#include "flownet/grid.hpp"
#include "flownet/markov.hpp"
#include "flownet/matrix_io.hpp"
#include "flownet/network.hpp"
#include "flownet/network_io.hpp"

namespace {

using flownet::validation_error;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw validation_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw validation_error("write failed for '" + path + "'");
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}

struct KernelFlags {
    std::string kernel = "exponential";
    double sill = 0.0;
    double range = 0.0;
    std::string params_path;

    void attach(CLI::App* cmd, bool with_params_file) {
        cmd->add_option("--kernel", kernel, "kernel family")
            ->check(CLI::IsMember({"exponential", "spherical", "linear_sill"}));
        cmd->add_option("--sill", sill, "sill theta_s");
        cmd->add_option("--range", range, "range theta_r");
        if (with_params_file)
            cmd->add_option("--params", params_path,
                            "params JSON from `estimate` (flags override)");
    }

    flownet::KernelSpec resolve() const {
        std::string kind = kernel;
        double ts = sill, tr = range;
        if (!params_path.empty()) {
            nlohmann::json p;
            try {
                p = nlohmann::json::parse(slurp(params_path));
                if (kind == "exponential" && p.contains("kernel"))
                    kind = p.at("kernel").get<std::string>();
                if (ts <= 0) ts = p.at("theta_s").get<double>();
                if (tr <= 0) tr = p.at("theta_r").get<double>();
            } catch (const nlohmann::json::exception& e) {
                throw validation_error(std::string("bad params file: ") + e.what());
            }
        }
        if (ts <= 0) throw validation_error("sill must be positive (set --sill or --params)");
        if (tr <= 0) throw validation_error("range must be positive (set --range or --params)");
        return {flownet::kernel_kind_from_string(kind), ts, tr};
    }
};

Eigen::MatrixXd covariance_for(const flownet::DirectedNetwork& net,
                               const flownet::MarkovSolution& markov,
                               const flownet::KernelSpec& k,
                               const std::string& method) {
    if (method == "closed-form") {
        if (k.kind != flownet::KernelKind::exponential)
            throw validation_error(
                "closed-form assembly exists only for the exponential kernel; "
                "use --method path-sum");
        return flownet::cov_matrix_exponential(net, markov, k.sill, k.range);
    }
    const int n = net.size();
    Eigen::MatrixXd sigma(n, n);
    for (int x = 0; x < n; ++x) {
        sigma(x, x) = k.sill;
        for (int y = x + 1; y < n; ++y)
            sigma(x, y) = sigma(y, x) = flownet::cov_pathsum(net, markov, k, x, y);
    }
    return sigma;
}

nlohmann::json kernel_json(const flownet::KernelSpec& k) {
    return {{"kernel", flownet::to_string(k.kind)},
            {"theta_s", k.sill},
            {"theta_r", k.range}};
}

// --- subcommand configs --------------------------------------------------

struct BuildNetCmd {
    std::string grid_path, out_path;
    std::string edge_metric = "euclidean";

    void run() const {
        auto grid = flownet::parse_grid(slurp(grid_path));
        auto metric = edge_metric == "time" ? flownet::EdgeMetric::time
                                            : flownet::EdgeMetric::euclidean;
        auto net = flownet::build_network(grid, metric);
        spit(out_path, flownet::write_network(net));
        auto cls = flownet::classify_vertices(net);
        std::cout << "build-net ok vertices=" << net.size()
                  << " edges=" << net.edges.size()
                  << " sources=" << cls.sources.size()
                  << " outlets=" << cls.outlets.size() << " out=" << out_path
                  << "\n";
    }
};

struct CovmatCmd {
    std::string net_path, out_path;
    std::string method = "closed-form";
    KernelFlags kernel;

    void run() const {
        auto net = flownet::read_network(slurp(net_path));
        auto markov = flownet::MarkovSolution::solve(net);
        auto k = kernel.resolve();
        Eigen::MatrixXd sigma = covariance_for(net, markov, k, method);
        flownet::write_matrix(out_path, sigma);
        std::cout << "covmat ok method=" << method << " kernel="
                  << flownet::to_string(k.kind) << " n=" << net.size()
                  << " out=" << out_path << "\n";
    }
};

struct EstimateCmd {
    std::string net_path, fields_path, out_path;
    std::string kernel = "exponential";
    int bins = 15;

    void run() const {
        auto net = flownet::read_network(slurp(net_path));
        auto markov = flownet::MarkovSolution::solve(net);
        Eigen::MatrixXd fields = flownet::read_matrix(fields_path);
        if (fields.cols() != net.size())
            throw validation_error("field matrix has " +
                                   std::to_string(fields.cols()) +
                                   " columns, network has " +
                                   std::to_string(net.size()) + " vertices");
        std::vector<Eigen::VectorXd> reps;
        for (Eigen::Index m = 0; m < fields.rows(); ++m)
            reps.push_back(fields.row(m).transpose());

        auto plan = flownet::EstimationPlan::build(net, markov, bins);
        auto kind = flownet::kernel_kind_from_string(kernel);
        auto est = flownet::estimate_covariance_multi(plan, reps, kind);

        nlohmann::json j;
        j["kernel"] = kernel;
        j["theta_s"] = est.theta_s_hat;
        j["theta_r"] = est.theta_r_hat;
        j["lambda"] = est.lambda;
        j["bins"] = nlohmann::json::array();
        for (std::size_t b = 0; b < est.bins.size(); ++b) {
            double c = est.c_hat(static_cast<Eigen::Index>(b));
            j["bins"].push_back({{"lo", est.bins[b].lo},
                                 {"hi", est.bins[b].hi},
                                 {"h", est.bins[b].h},
                                 {"c_hat", c},
                                 {"gamma_hat", est.theta_s_hat - c}});
        }
        j["diagnostics"] = {{"degenerate", est.degenerate},
                            {"pair_count", est.pair_count},
                            {"h_inf_pairs", plan.h_inf.size()},
                            {"replicates", reps.size()}};
        spit(out_path, j.dump(2) + "\n");
        std::cout << "estimate ok theta_s=" << fmt(est.theta_s_hat)
                  << " theta_r=" << fmt(est.theta_r_hat)
                  << " lambda=" << fmt(est.lambda) << " bins=" << est.bins.size()
                  << " degenerate=" << (est.degenerate ? 1 : 0)
                  << " out=" << out_path << "\n";
    }
};

struct SimulateCmd {
    std::string net_path, out_path;
    KernelFlags kernel;
    std::string method = "closed-form";
    int m = 500;
    std::uint64_t seed = 0;

    void run() const {
        if (m < 1) throw validation_error("--m must be >= 1");
        auto net = flownet::read_network(slurp(net_path));
        auto markov = flownet::MarkovSolution::solve(net);
        auto k = kernel.resolve();
        Eigen::MatrixXd sigma = covariance_for(net, markov, k, method);
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(net.size());
        auto ens = flownet::sample_gaussian(mu, sigma, m, seed);
        flownet::write_matrix(out_path, ens.values);
        // fold ensemble metadata into the matrix sidecar
        nlohmann::json side = nlohmann::json::parse(slurp(out_path + ".json"));
        side["seed"] = seed;
        side["M"] = m;
        side["n"] = net.size();
        side["params"] = kernel_json(k);
        spit(out_path + ".json", side.dump(2) + "\n");
        std::cout << "simulate ok m=" << m << " n=" << net.size()
                  << " seed=" << seed << " out=" << out_path << "\n";
    }
};

struct KrigeCmd {
    std::string net_path, obs_path, out_path;
    KernelFlags kernel;
    std::string mode = "simple";
    std::string method = "closed-form";
    double mean = 0.0;

    void run() const {
        auto net = flownet::read_network(slurp(net_path));
        auto markov = flownet::MarkovSolution::solve(net);
        auto k = kernel.resolve();
        Eigen::MatrixXd sigma = covariance_for(net, markov, k, method);

        std::vector<int> obs_idx;
        std::vector<double> obs_vals;
        std::istringstream in(slurp(obs_path));
        std::string line;
        std::size_t line_no = 0;
        if (!std::getline(in, line) ||
            (line != "vertex,value" && line != "vertex,value\r"))
            throw validation_error("observations need header 'vertex,value'");
        ++line_no;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto comma = line.find(',');
            if (comma == std::string::npos)
                throw validation_error("line " + std::to_string(line_no) +
                                       ": expected 'vertex,value'");
            int v = std::stoi(line.substr(0, comma));
            if (v < 0 || v >= net.size())
                throw validation_error("line " + std::to_string(line_no) +
                                       ": vertex id out of range");
            obs_idx.push_back(v);
            obs_vals.push_back(std::stod(line.substr(comma + 1)));
        }
        Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(
            obs_vals.data(), static_cast<Eigen::Index>(obs_vals.size()));
        Eigen::VectorXd mu = Eigen::VectorXd::Constant(net.size(), mean);
        auto km = mode == "ordinary" ? flownet::KrigingMode::ordinary
                                     : flownet::KrigingMode::simple;
        auto res = flownet::krige(obs_idx, z, sigma, mu, km);

        std::ostringstream out;
        out.precision(17);
        out << "vertex,prediction,variance\n";
        for (int t = 0; t < net.size(); ++t)
            out << t << ',' << res.predictions(t) << ',' << res.variances(t)
                << '\n';
        spit(out_path, out.str());
        std::cout << "krige ok mode=" << mode << " obs=" << obs_idx.size()
                  << " targets=" << net.size() << " out=" << out_path << "\n";
    }
};

struct ExtremesCmd {
    std::string ens_path, net_path, out_prefix;
    double threshold = 0.0;
    double alpha = 0.05;
    std::vector<double> center;
    std::vector<double> radii;

    void run() const {
        auto net = flownet::read_network(slurp(net_path));
        Eigen::MatrixXd values = flownet::read_matrix(ens_path);
        if (values.cols() != net.size())
            throw validation_error("ensemble/network vertex count mismatch");
        flownet::FieldEnsemble ens;
        ens.M = static_cast<int>(values.rows());
        ens.values = values;
        ens.mean = Eigen::VectorXd::Zero(net.size());

        auto res = flownet::excursion_sets(ens, threshold, alpha);
        nlohmann::json j;
        j["threshold"] = threshold;
        j["alpha"] = alpha;
        j["inner"] = res.inner_set;
        j["outer"] = res.outer_set;
        j["marginals"] = std::vector<double>(
            res.marginal_probs.data(),
            res.marginal_probs.data() + res.marginal_probs.size());
        j["inner_containment"] = res.inner_containment;
        j["outer_containment"] = res.outer_containment;
        spit(out_prefix + ".json", j.dump(2) + "\n");

        std::size_t radii_rows = 0;
        if (!radii.empty()) {
            if (center.size() != 2)
                throw validation_error("--center x y is required with --radii");
            auto coords = flownet::vertex_coords(net);
            auto je = flownet::joint_exceedance(ens, coords, center[0], center[1],
                                                radii, threshold);
            std::ostringstream out;
            out.precision(17);
            out << "radius,p_union,p_intersection\n";
            for (const auto& row : je)
                out << row.radius << ',' << row.p_union << ','
                    << row.p_intersection << '\n';
            spit(out_prefix + "_exceedance.csv", out.str());
            radii_rows = je.size();
        }
        std::cout << "extremes ok threshold=" << fmt(threshold)
                  << " alpha=" << fmt(alpha) << " inner=" << res.inner_set.size()
                  << " outer=" << res.outer_set.size() << " radii=" << radii_rows
                  << " out=" << out_prefix << "\n";
    }
};

struct BenchCmd {
    std::string out_prefix;
    std::uint64_t seed = 0;
    int replicates = 50;
    double sill = 1.0;
    std::vector<double> ranges = {20, 35, 50, 65, 80};
    double test_fraction = 0.2;
    int cols = 8, rows = 16;
    double spacing_x = 10.0, spacing_y = 1.0;
    int bins = 15;

    void run() const {
        auto grid = flownet::make_channel_grid(cols, rows, spacing_x, spacing_y);
        auto net = flownet::build_network(grid);
        auto report = flownet::run_sim_study(net, ranges, sill, replicates,
                                             test_fraction, seed, bins);
        spit(out_prefix + ".csv", report.to_csv());

        nlohmann::json summary;
        summary["vertices"] = net.size();
        summary["replicates"] = replicates;
        summary["theta_s_true"] = sill;
        summary["seed"] = seed;
        summary["per_range"] = nlohmann::json::array();
        for (double r : ranges) {
            std::vector<double> ts, tr, mn, me, fn, fe, kn, ke;
            int net_mse_wins = 0, net_frob_wins = 0, net_kl_wins = 0, count = 0;
            for (const auto& rec : report.records) {
                if (rec.theta_r_true != r) continue;
                ++count;
                ts.push_back(rec.theta_s_hat);
                tr.push_back(rec.theta_r_hat);
                mn.push_back(rec.mse_network);
                me.push_back(rec.mse_euclid);
                net_mse_wins += rec.mse_network < rec.mse_euclid;
                net_frob_wins += rec.frobenius_net < rec.frobenius_euc;
                net_kl_wins += rec.kl_net < rec.kl_euc;
            }
            auto mean = [](const std::vector<double>& v) {
                double a = 0;
                for (double x : v) a += x;
                return a / static_cast<double>(v.size());
            };
            auto median = [](std::vector<double> v) {
                std::sort(v.begin(), v.end());
                std::size_t k = v.size() / 2;
                return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
            };
            summary["per_range"].push_back(
                {{"theta_r_true", r},
                 {"mean_theta_s_hat", mean(ts)},
                 {"median_theta_r_hat", median(tr)},
                 {"mean_mse_network", mean(mn)},
                 {"mean_mse_euclid", mean(me)},
                 {"net_mse_win_rate", static_cast<double>(net_mse_wins) / count},
                 {"net_frobenius_win_rate",
                  static_cast<double>(net_frob_wins) / count},
                 {"net_kl_win_rate", static_cast<double>(net_kl_wins) / count}});
        }
        spit(out_prefix + "_summary.json", summary.dump(2) + "\n");
        std::cout << "bench ok records=" << report.records.size()
                  << " vertices=" << net.size() << " seed=" << seed
                  << " out=" << out_prefix << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-informed covariance models on directed linear networks"};
    app.require_subcommand(1);
    int threads = 1;  // accepted everywhere; results do not depend on it

    BuildNetCmd build_net;
    auto* cmd_bn = app.add_subcommand("build-net",
                                      "build the directed network from a grid");
    cmd_bn->add_option("--grid", build_net.grid_path, "velocity grid CSV")
        ->required();
    cmd_bn->add_option("--out", build_net.out_path, "network JSON output")
        ->required();
    cmd_bn->add_option("--edge-metric", build_net.edge_metric,
                       "edge length metric")
        ->check(CLI::IsMember({"euclidean", "time"}));

    CovmatCmd covmat;
    auto* cmd_cm = app.add_subcommand("covmat", "assemble a covariance matrix");
    cmd_cm->add_option("--net", covmat.net_path, "network JSON")->required();
    cmd_cm->add_option("--out", covmat.out_path, "matrix output")->required();
    cmd_cm->add_option("--method", covmat.method, "assembly method")
        ->check(CLI::IsMember({"closed-form", "path-sum"}));
    covmat.kernel.attach(cmd_cm, true);

    EstimateCmd estimate;
    auto* cmd_es = app.add_subcommand("estimate",
                                      "penalized covariance estimation");
    cmd_es->add_option("--net", estimate.net_path, "network JSON")->required();
    cmd_es->add_option("--fields", estimate.fields_path,
                       "field matrix (replicates x vertices)")
        ->required();
    cmd_es->add_option("--out", estimate.out_path, "params JSON output")
        ->required();
    cmd_es->add_option("--kernel", estimate.kernel, "kernel family")
        ->check(CLI::IsMember({"exponential", "spherical", "linear_sill"}));
    cmd_es->add_option("--bins", estimate.bins, "distance bin count");

    SimulateCmd simulate;
    auto* cmd_si = app.add_subcommand("simulate", "Gaussian ensemble simulation");
    cmd_si->add_option("--net", simulate.net_path, "network JSON")->required();
    cmd_si->add_option("--out", simulate.out_path, "ensemble output")->required();
    cmd_si->add_option("--m", simulate.m, "realization count");
    cmd_si->add_option("--seed", simulate.seed, "master seed")->required();
    cmd_si->add_option("--method", simulate.method, "covariance assembly")
        ->check(CLI::IsMember({"closed-form", "path-sum"}));
    simulate.kernel.attach(cmd_si, true);

    KrigeCmd krige;
    auto* cmd_kr = app.add_subcommand("krige", "kriging prediction");
    cmd_kr->add_option("--net", krige.net_path, "network JSON")->required();
    cmd_kr->add_option("--obs", krige.obs_path, "observations CSV (vertex,value)")
        ->required();
    cmd_kr->add_option("--out", krige.out_path, "predictions CSV")->required();
    cmd_kr->add_option("--mode", krige.mode, "kriging mode")
        ->check(CLI::IsMember({"simple", "ordinary"}));
    cmd_kr->add_option("--method", krige.method, "covariance assembly")
        ->check(CLI::IsMember({"closed-form", "path-sum"}));
    cmd_kr->add_option("--mean", krige.mean, "process mean (simple mode)");
    krige.kernel.attach(cmd_kr, true);

    ExtremesCmd extremes;
    auto* cmd_ex = app.add_subcommand("extremes",
                                      "excursion sets and joint exceedance");
    cmd_ex->add_option("--ens", extremes.ens_path, "ensemble matrix")->required();
    cmd_ex->add_option("--net", extremes.net_path, "network JSON")->required();
    cmd_ex->add_option("--out", extremes.out_prefix, "output prefix")->required();
    cmd_ex->add_option("--threshold", extremes.threshold, "exceedance threshold")
        ->required();
    cmd_ex->add_option("--alpha", extremes.alpha, "credibility level");
    cmd_ex->add_option("--center", extremes.center, "neighborhood center x y")
        ->expected(2);
    cmd_ex->add_option("--radii", extremes.radii, "neighborhood radii (km)")
        ->delimiter(',');

    BenchCmd bench;
    auto* cmd_be = app.add_subcommand("bench", "desk-scale simulation study");
    cmd_be->add_option("--out", bench.out_prefix, "output prefix")->required();
    cmd_be->add_option("--seed", bench.seed, "master seed")->required();
    cmd_be->add_option("--replicates", bench.replicates, "replicates per range");
    cmd_be->add_option("--sill", bench.sill, "true sill");
    cmd_be->add_option("--ranges", bench.ranges, "true range values")
        ->delimiter(',');
    cmd_be->add_option("--test-fraction", bench.test_fraction,
                       "hold-out fraction");
    cmd_be->add_option("--cols", bench.cols, "channel grid columns");
    cmd_be->add_option("--rows", bench.rows, "channel grid rows");
    cmd_be->add_option("--spacing-x", bench.spacing_x, "along-channel spacing");
    cmd_be->add_option("--spacing-y", bench.spacing_y, "cross-channel spacing");
    cmd_be->add_option("--bins", bench.bins, "distance bin count");

    for (auto* cmd : app.get_subcommands({})) {
        cmd->add_option("--threads", threads, "thread cap (no effect on results)");
        cmd->set_config("--config", "", "key=value config file (flags override)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_bn->parsed()) build_net.run();
        if (cmd_cm->parsed()) covmat.run();
        if (cmd_es->parsed()) estimate.run();
        if (cmd_si->parsed()) simulate.run();
        if (cmd_kr->parsed()) krige.run();
        if (cmd_ex->parsed()) extremes.run();
        if (cmd_be->parsed()) bench.run();
    } catch (const flownet::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const flownet::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
