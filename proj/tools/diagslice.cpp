// diagslice command-line interface.
//
// Exit codes: 0 ok, 2 usage or validation, 3 numeric failure, 4 sampling
// degeneracy, 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <diagslice/diagslice.hpp>

namespace ds = diagslice;

namespace {

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    int d = 2;
    int n = 2;
    std::string method = "exact";
    std::vector<double> cuts;
    std::vector<double> p;
    bool iid = false;
    std::size_t reps = 10000;
    std::uint64_t seed = 0;
    std::size_t budget = 1000;
    std::vector<std::string> algo;
    std::size_t runs = 1;
    std::size_t lowfi_reps = 1500;
    std::size_t hifi_reps = 10000;
    std::vector<int> dims;
    std::vector<int> ns;
    int grid = 200;
    int max_n = 0;
    bool from_published = false;
    std::string data = ds::default_published_data_path();

    std::string format = "csv";
    std::string out;
    std::string out_dir;
    std::string table;
    bool timing = false;
    std::string config;
};

const std::vector<std::string> methods{"exact", "normal", "hybrid"};

CLI::App* leaf(CLI::App& parent, const std::string& name, const std::string& help) {
    auto* s = parent.add_subcommand(name, help);
    s->fallthrough();
    return s;
}

void add_output(CLI::App* s, Options& o) {
    s->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("-o,--out", o.out, "Output file (default stdout)");
    s->add_option("--out-dir", o.out_dir, "Write to <dir>/<experiment>_<d>d_<N>.<ext>");
    s->add_option("--table", o.table, "Table written in CSV mode (default records)");
    s->add_flag("--timing", o.timing, "Include wall-clock seconds in JSON output");
}

void add_dn(CLI::App* s, Options& o) {
    s->add_option("-d,--dim", o.d, "Dimension")->check(CLI::Range(1, ds::max_dimension));
    s->add_option("-N,--strata", o.n, "Number of strata")->check(CLI::PositiveNumber);
}

void add_partition_source(CLI::App* s, Options& o) {
    s->add_option("--method", o.method, "Cut construction")->check(CLI::IsMember(methods));
    s->add_option("--cuts", o.cuts, "Explicit sum-coordinate cuts r_i")->delimiter(',');
    s->add_option("--p", o.p, "Explicit diagonal-coordinate cuts p_i")->delimiter(',');
}

void add_reps_seed(CLI::App* s, Options& o) {
    s->add_option("--reps", o.reps, "Monte Carlo repetitions");
    s->add_option("--seed", o.seed, "Master seed");
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "-" : "") + std::to_string(v[i]);
    return s;
}

bool given(const CLI::App* s, const std::string& name) {
    const auto* opt = s->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

ds::Partition make_partition(const Options& o, const CLI::App* s) {
    const int sources = (!o.cuts.empty()) + (!o.p.empty()) + given(s, "--method");
    if (sources > 1) throw usage_error("give at most one of --method, --cuts and --p");
    std::optional<ds::Partition> part;
    if (!o.cuts.empty())
        part.emplace(o.d, o.cuts);
    else if (!o.p.empty())
        part.emplace(ds::from_diagonal(ds::DiagonalCoords(o.d, o.p)));
    if (part) {
        if (given(s, "--strata") && static_cast<int>(part->strata()) != o.n)
            throw usage_error("-N " + std::to_string(o.n) + " does not match the " +
                              std::to_string(part->strata()) + " strata implied by the cuts");
        return *part;
    }
    if (o.method == "normal") return ds::normal_approx_set(o.d, o.n);
    if (o.method == "hybrid") return ds::hybrid_set(o.d, o.n);
    return ds::generating_set(o.d, o.n);
}

std::string source_name(const Options& o) {
    if (o.iid) return "iid";
    if (!o.cuts.empty()) return "cuts";
    if (!o.p.empty()) return "p";
    return o.method;
}

ds::Algorithm parse_algorithm(const std::string& a) {
    if (a == "es") return ds::Algorithm::one_plus_one_es;
    if (a == "cma") return ds::Algorithm::diagonal_cma;
    throw usage_error("--algo must be es or cma, got " + a);
}

void emit(const ds::ExperimentReport& rep, const Options& o, const std::string& dtag,
          const std::string& ntag) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    std::string path = o.out;
    if (path.empty() && !o.out_dir.empty())
        path = (std::filesystem::path(o.out_dir) / ds::default_filename(rep.id, dtag, ntag, o.format))
                   .string();
    if (!path.empty()) {
        file.open(path, std::ios::binary);
        if (!file) throw usage_error("cannot open output file " + path);
        os = &file;
    }
    if (o.format == "json")
        ds::write_json(*os, rep, o.timing);
    else
        ds::write_csv(*os, rep.table(o.table));
    os->flush();
    if (!*os) throw std::runtime_error("write failed");
}

// ---------------------------------------------------------------------------

ds::ExperimentReport cmd_partition(const Options& o, const CLI::App* s) {
    const auto part = make_partition(o, s);
    const double root = std::sqrt(static_cast<double>(o.d));
    ds::ExperimentReport rep;
    rep.id = "partition";
    rep.parameters["d"] = o.d;
    rep.parameters["N"] = part.strata();
    rep.parameters["method"] = source_name(o);
    rep.records.columns = {"stratum", "r_lower", "r_upper", "p_lower", "p_upper", "volume"};
    for (std::size_t i = 0; i < part.strata(); ++i)
        rep.records.add_row({static_cast<std::int64_t>(i), part.lower(i), part.upper(i),
                             part.lower(i) / root, part.upper(i) / root, part.stratum_volume(i)});
    ds::Table cuts{{"i", "r", "p"}, {}};
    for (std::size_t i = 0; i < part.cuts().size(); ++i)
        cuts.add_row({static_cast<std::int64_t>(i + 1), part.cuts()[i], part.cuts()[i] / root});
    rep.extras.emplace_back("cuts", std::move(cuts));
    return rep;
}

ds::ExperimentReport cmd_sample(const Options& o, const CLI::App* s) {
    ds::ExperimentReport rep;
    rep.id = "sample";
    rep.seeds = {o.seed};
    const ds::RngSpec spec{o.seed, 0};
    ds::PointSet ps;
    if (o.iid) {
        if (!o.cuts.empty() || !o.p.empty() || given(s, "--method"))
            throw usage_error("--iid cannot be combined with --method, --cuts or --p");
        ps = ds::sample_iid(o.d, static_cast<std::size_t>(o.n), spec);
    } else {
        ps = ds::sample_stratified(make_partition(o, s), spec);
    }
    rep.parameters["d"] = o.d;
    rep.parameters["N"] = ps.size();
    rep.parameters["source"] = source_name(o);
    rep.parameters["seed"] = o.seed;
    auto& cols = rep.records.columns;
    cols = {"point", "stratum"};
    for (int j = 1; j <= o.d; ++j) cols.push_back("x" + std::to_string(j));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        std::vector<ds::Cell> row{static_cast<std::int64_t>(i),
                                  ps.strata ? static_cast<std::int64_t>((*ps.strata)[i]) : std::int64_t{-1}};
        for (double x : ps.point(i)) row.emplace_back(x);
        rep.records.add_row(std::move(row));
    }
    ds::Table summary{{"d", "N", "cube_draws"}, {}};
    summary.add_row({std::int64_t{o.d}, static_cast<std::int64_t>(ps.size()),
                     static_cast<std::int64_t>(ps.cube_draws)});
    rep.extras.emplace_back("summary", std::move(summary));
    return rep;
}

ds::ExperimentReport cmd_discrepancy(const Options& o, const CLI::App* s) {
    ds::SampleSource src = ds::IidSource{o.d, static_cast<std::size_t>(o.n)};
    if (o.iid) {
        if (!o.cuts.empty() || !o.p.empty() || given(s, "--method"))
            throw usage_error("--iid cannot be combined with --method, --cuts or --p");
        if (o.d < 1 || o.d > ds::max_dimension) throw ds::domain_error("bad dimension");
    } else {
        src = make_partition(o, s);
    }
    const auto est = ds::expected_l2sq(src, o.reps, o.seed);
    ds::ExperimentReport rep;
    rep.id = "discrepancy";
    rep.seeds = {o.seed};
    rep.parameters["d"] = o.d;
    rep.parameters["N"] = est.n;
    rep.parameters["source"] = source_name(o);
    rep.parameters["reps"] = o.reps;
    rep.records.columns = {"d", "N", "source", "reps", "mean_sq", "std_err", "variance",
                           "iid_analytic"};
    rep.records.add_row({std::int64_t{o.d}, static_cast<std::int64_t>(est.n), source_name(o),
                         static_cast<std::int64_t>(est.reps), est.mean_sq, est.std_err, est.variance,
                         ds::iid_expected_l2sq_analytic(o.d, est.n)});
    return rep;
}

ds::ExperimentReport cmd_optimize(const Options& o) {
    if (o.algo.size() > 1) throw usage_error("optimize takes a single --algo");
    ds::OptimizerConfig cfg;
    cfg.d = o.d;
    cfg.n = o.n;
    cfg.budget = o.budget;
    cfg.lowfi_reps = o.lowfi_reps;
    cfg.hifi_reps = o.hifi_reps;
    cfg.algorithm = parse_algorithm(o.algo.empty() ? "es" : o.algo.front());
    cfg.master_seed = o.seed;
    if (o.runs < 1) throw usage_error("--runs must be >= 1");
    cfg.validate();
    const auto run = ds::run_best_of(cfg, o.runs);

    ds::ExperimentReport rep;
    rep.id = "optimize";
    rep.seeds = {o.seed};
    rep.parameters["d"] = o.d;
    rep.parameters["N"] = o.n;
    rep.parameters["algorithm"] = ds::to_string(cfg.algorithm);
    rep.parameters["budget"] = o.budget;
    rep.parameters["runs"] = o.runs;
    rep.parameters["lowfi_reps"] = o.lowfi_reps;
    rep.parameters["hifi_reps"] = o.hifi_reps;
    rep.records.columns = {"d", "N", "algorithm", "budget", "runs", "eval_count", "best_lowfi",
                           "best_lowfi_se", "best_hifi", "best_hifi_se"};
    rep.records.add_row({std::int64_t{o.d}, std::int64_t{o.n}, ds::to_string(cfg.algorithm),
                         static_cast<std::int64_t>(o.budget), static_cast<std::int64_t>(o.runs),
                         static_cast<std::int64_t>(run.eval_count), run.best_lowfi, run.best_lowfi_se,
                         run.best_hifi.mean_sq, run.best_hifi.std_err});
    const double root = std::sqrt(static_cast<double>(o.d));
    ds::Table best{{"i", "p", "r"}, {}};
    for (std::size_t i = 0; i < run.best_candidate.size(); ++i)
        best.add_row({static_cast<std::int64_t>(i + 1), run.best_candidate.values()[i],
                      run.best_candidate.values()[i] * root});
    ds::Table traj{{"evaluation", "best"}, {}};
    for (const auto& t : run.trajectory)
        traj.add_row({static_cast<std::int64_t>(t.evaluation), t.best});
    rep.extras.emplace_back("best", std::move(best));
    rep.extras.emplace_back("trajectory", std::move(traj));
    return rep;
}

std::vector<ds::PublishedPointSet> filtered_published_sets(const Options& o) {
    std::vector<ds::PublishedPointSet> out;
    for (auto& s : ds::load_published_pointsets(o.data)) {
        if (!o.dims.empty() && std::find(o.dims.begin(), o.dims.end(), s.d) == o.dims.end()) continue;
        if (!o.algo.empty() && std::find(o.algo.begin(), o.algo.end(), s.optimizer) == o.algo.end())
            continue;
        if (o.max_n > 0 && s.n > o.max_n) continue;
        out.push_back(std::move(s));
    }
    if (out.empty()) throw usage_error("no point sets match the given filters");
    return out;
}

// ---------------------------------------------------------------------------

struct Cli {
    Options o;
    CLI::App app{"Diagonal stratification of the unit cube: partitions, sampling, "
                 "discrepancy and cut optimisation"};
    CLI::App* partition = nullptr;
    CLI::App* sample = nullptr;
    CLI::App* discrepancy = nullptr;
    CLI::App* optimize = nullptr;
    CLI::App* experiment = nullptr;
    CLI::App* convergence = nullptr;
    CLI::App* volume = nullptr;
    CLI::App* comparison = nullptr;
    CLI::App* rescore = nullptr;
    CLI::App* kde = nullptr;

    Cli() {
        app.name("diagslice");
        app.set_version_flag("--version", std::string(ds::version));
        app.require_subcommand(1);
        app.add_option("--config", o.config, "key=value file; command-line flags take precedence");

        partition = leaf(app, "partition", "Cuts and stratum volumes of a partition");
        add_dn(partition, o);
        add_partition_source(partition, o);
        add_output(partition, o);

        sample = leaf(app, "sample", "One stratified (or i.i.d.) sample");
        add_dn(sample, o);
        add_partition_source(sample, o);
        sample->add_flag("--iid", o.iid, "i.i.d. uniform points instead");
        sample->add_option("--seed", o.seed, "Master seed");
        add_output(sample, o);

        discrepancy = leaf(app, "discrepancy", "Expected squared L2 star discrepancy");
        add_dn(discrepancy, o);
        add_partition_source(discrepancy, o);
        discrepancy->add_flag("--iid", o.iid, "i.i.d. uniform points instead");
        add_reps_seed(discrepancy, o);
        add_output(discrepancy, o);

        optimize = leaf(app, "optimize", "Search cut positions minimising expected discrepancy");
        add_dn(optimize, o);
        optimize->add_option("--algo", o.algo, "es or cma")->check(CLI::IsMember({"es", "cma"}));
        optimize->add_option("--budget", o.budget, "Evaluations per run");
        optimize->add_option("--runs", o.runs, "Independent runs; the best is kept");
        optimize->add_option("--lowfi-reps", o.lowfi_reps, "Repetitions per evaluation");
        optimize->add_option("--hifi-reps", o.hifi_reps, "Repetitions for the final re-scoring");
        optimize->add_option("--seed", o.seed, "Master seed");
        add_output(optimize, o);

        experiment = leaf(app, "experiment", "Scripted studies");
        experiment->require_subcommand(1);

        convergence = leaf(*experiment, "convergence", "Normal approximation error at exact cuts");
        convergence->add_option("--dims", o.dims, "Dimensions")->delimiter(',');
        convergence->add_option("-N,--strata", o.n, "Number of strata");
        add_output(convergence, o);

        volume = leaf(*experiment, "volume-deviation", "Slice volumes of normal-approximation cuts");
        volume->add_option("-d,--dim", o.d, "Dimension");
        volume->add_option("--Ns", o.ns, "Numbers of strata")->delimiter(',');
        add_output(volume, o);

        comparison = leaf(*experiment, "comparison", "i.i.d. vs equivolume vs optimised");
        comparison->add_option("-d,--dim", o.d, "Dimension");
        comparison->add_option("--Ns", o.ns, "Numbers of strata")->delimiter(',');
        comparison->add_option("--algo", o.algo, "Optimisers to include")
            ->delimiter(',')
            ->check(CLI::IsMember({"es", "cma"}));
        comparison->add_option("--budget", o.budget, "Evaluations per run");
        comparison->add_option("--runs", o.runs, "Independent runs per cell");
        comparison->add_option("--lowfi-reps", o.lowfi_reps, "Repetitions per evaluation");
        add_reps_seed(comparison, o);
        add_output(comparison, o);

        rescore = leaf(*experiment, "rescore", "Re-estimate published point sets");
        rescore->add_option("--data", o.data, "Point-set data file");
        rescore->add_option("--dims", o.dims, "Keep only these dimensions")->delimiter(',');
        rescore->add_option("--algo", o.algo, "Keep only these optimisers (cma, es, ngopt)")
            ->delimiter(',')
            ->check(CLI::IsMember({"es", "cma", "ngopt"}));
        rescore->add_option("--max-N", o.max_n, "Keep only sets with at most this many strata");
        add_reps_seed(rescore, o);
        add_output(rescore, o);

        kde = leaf(*experiment, "kde", "Gaussian kernel density of cut positions");
        kde->add_option("-d,--dim", o.d, "Dimension");
        kde->add_option("--Ns", o.ns, "Numbers of strata")->delimiter(',');
        kde->add_option("--method", o.method, "Cut construction")->check(CLI::IsMember(methods));
        kde->add_flag("--published", o.from_published, "Use published point sets instead");
        kde->add_option("--data", o.data, "Point-set data file");
        kde->add_option("--dims", o.dims, "With --published: keep only these dimensions")
            ->delimiter(',');
        kde->add_option("--algo", o.algo, "With --published: keep only these optimisers")
            ->delimiter(',')
            ->check(CLI::IsMember({"es", "cma", "ngopt"}));
        kde->add_option("--max-N", o.max_n, "With --published: at most this many strata");
        kde->add_option("--grid", o.grid, "Grid points over [0, sqrt(d)]");
        add_output(kde, o);
    }

    CLI::App* selected() {
        CLI::App* cur = &app;
        for (;;) {
            auto subs = cur->get_subcommands();
            if (subs.empty()) return cur;
            cur = subs.front();
        }
    }

    ds::ExperimentReport dispatch(std::string& dtag, std::string& ntag) {
        dtag = std::to_string(o.d);
        ntag = std::to_string(o.n);
        auto* s = selected();
        if (s == partition) return cmd_partition(o, s);
        if (s == sample) return cmd_sample(o, s);
        if (s == discrepancy) return cmd_discrepancy(o, s);
        if (s == optimize) return cmd_optimize(o);
        if (s == convergence) {
            const auto dims = o.dims.empty() ? std::vector<int>{3, 5, 10} : o.dims;
            const int n = given(s, "--strata") ? o.n : 10000;
            dtag = join(dims);
            ntag = std::to_string(n);
            return ds::convergence_experiment(dims, n);
        }
        if (s == volume) {
            const int d = given(s, "--dim") ? o.d : 5;
            const auto ns = o.ns.empty() ? std::vector<int>{100, 1000, 10000} : o.ns;
            dtag = std::to_string(d);
            ntag = join(ns);
            return ds::volume_deviation_experiment(d, ns);
        }
        if (s == comparison) {
            const auto ns = o.ns.empty() ? std::vector<int>{3, 4, 5, 6, 7, 8, 9, 10, 15, 20} : o.ns;
            ds::ComparisonOptions co;
            co.reps = o.reps;
            for (const auto& a : o.algo) co.optimizers.push_back(parse_algorithm(a));
            co.budget = o.budget;
            co.lowfi_reps = o.lowfi_reps;
            co.runs = o.runs;
            co.master_seed = o.seed;
            ntag = join(ns);
            return ds::comparison_table(o.d, ns, co);
        }
        if (s == rescore) {
            const auto sets = filtered_published_sets(o);
            dtag = o.dims.empty() ? "all" : join(o.dims);
            ntag = o.max_n > 0 ? "le" + std::to_string(o.max_n) : "all";
            auto rep = ds::rescore_experiment(sets, o.reps, o.seed);
            rep.parameters["data"] = std::filesystem::path(o.data).filename().string();
            return rep;
        }
        if (s == kde) {
            std::vector<ds::DiagonalCoords> sets;
            if (o.from_published) {
                for (const auto& ps : filtered_published_sets(o)) sets.emplace_back(ps.d, ps.p);
                dtag = o.dims.empty() ? "all" : join(o.dims);
                ntag = o.max_n > 0 ? "le" + std::to_string(o.max_n) : "all";
            } else {
                if (o.ns.empty()) throw usage_error("kde needs --Ns or --published");
                for (int n : o.ns) {
                    Options one = o;
                    one.n = n;
                    sets.push_back(ds::to_diagonal(make_partition(one, s)));
                }
                ntag = join(o.ns);
            }
            return ds::kde_summary(sets, o.grid);
        }
        throw usage_error("no subcommand selected");
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Config entries become extra command-line tokens for every option the user
// did not give explicitly; the command line is then parsed again.
std::vector<std::string> config_tokens(Cli& cli, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config file " + path);
    CLI::App* s = cli.selected();
    std::vector<std::string> tokens;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw usage_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        while (!key.empty() && key.front() == '-') key.erase(0, 1);
        std::string flag;
        const CLI::Option* opt = nullptr;
        for (const std::string dashes : {"-", "--"}) {
            if (dashes == "-" && key.size() != 1) continue;
            flag = dashes + key;
            for (const CLI::App* a = s; a && !opt; a = a->get_parent()) opt = a->get_option_no_throw(flag);
            if (opt) break;
        }
        if (!opt || key == "config")
            throw usage_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "' for subcommand " + s->get_name());
        if (opt->count() > 0) continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes" || value.empty())
                tokens.push_back(flag);
            else if (value != "false" && value != "0" && value != "no")
                throw usage_error(path + ":" + std::to_string(lineno) + ": flag '" + key +
                                  "' takes true or false");
        } else {
            tokens.push_back(flag);
            tokens.push_back(value);
        }
    }
    return tokens;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    auto cli = std::make_unique<Cli>();
    auto parse = [&](Cli& c, std::vector<std::string> a) -> std::optional<int> {
        std::reverse(a.begin(), a.end());
        try {
            c.app.parse(a);
        } catch (const CLI::CallForHelp& e) {
            return c.app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return c.app.exit(e);
        } catch (const CLI::CallForVersion& e) {
            return c.app.exit(e);
        } catch (const CLI::ParseError& e) {
            c.app.exit(e);
            return 2;
        }
        return std::nullopt;
    };

    if (auto code = parse(*cli, args)) return *code;
    if (!cli->o.config.empty()) {
        auto extra = config_tokens(*cli, cli->o.config);
        args.insert(args.end(), extra.begin(), extra.end());
        cli = std::make_unique<Cli>();
        if (auto code = parse(*cli, args)) return *code;
    }

    std::string dtag;
    std::string ntag;
    const auto rep = cli->dispatch(dtag, ntag);
    emit(rep, cli->o, dtag, ntag);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ds::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad data file: " << e.what() << "\n";
        return 2;
    } catch (const ds::sampling_error& e) {
        std::cerr << "sampling error: " << e.what() << "\n";
        return 4;
    } catch (const ds::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << " (bracket [" << e.bracket_lo() << ", "
                  << e.bracket_hi() << "])\n";
        return 3;
    } catch (const ds::range_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
