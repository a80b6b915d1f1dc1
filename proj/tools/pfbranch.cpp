#include "pfbranch/cpf.hpp"
#include "pfbranch/errors.hpp"
#include "pfbranch/gwfixed.hpp"
#include "pfbranch/gwrandenv.hpp"
#include "pfbranch/mbp.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/stats.hpp"
#include "pfbranch/suites.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace pfbranch;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct Options {
    double theta = 1.0;
    double a = 1.0;
    double b = 1.0;
    double gamma = 1.0;
    std::optional<double> q;
    std::uint64_t n = 20;
    std::optional<double> t;
    double lambda = 1.0;
    double mu = 0.0;
    std::uint64_t horizon = 10;
    std::uint64_t replicates = 1000;
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string format = "csv";
    std::string env_spec;
    std::string grid;
    std::string suite;
    std::string model;
    double budget = 1.0;
    unsigned threads = 0;
    bool timing = false;
    bool frozen = false;
    std::uint64_t cap = 1000000000;
};

class Sink {
public:
    explicit Sink(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file_.open(path);
        if (!file_)
            throw ConstraintViolation("cannot open output file " + path);
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::string g17(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_number(const std::string& s)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw ConstraintViolation("grid: not a number: '" + s + "'");
    return x;
}

// "lo:hi:count" or a comma separated list.
std::vector<double> parse_grid(const std::string& spec)
{
    std::vector<double> g;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':'))
            parts.push_back(item);
        if (parts.size() != 3)
            throw ConstraintViolation("grid: expected lo:hi:count");
        double lo = parse_number(parts[0]), hi = parse_number(parts[1]), c = parse_number(parts[2]);
        if (!(c >= 1 && c == std::floor(c) && c <= 1e7))
            throw ConstraintViolation("grid: count must be a positive integer");
        auto k = static_cast<std::size_t>(c);
        for (std::size_t i = 0; i < k; ++i)
            g.push_back(k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1));
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ','))
            g.push_back(parse_number(item));
    }
    if (g.empty())
        throw ConstraintViolation("grid is empty");
    return g;
}

void check_format(const Options& o)
{
    if (o.format != "csv" && o.format != "json")
        throw ConstraintViolation("format must be csv or json");
}

PfParams law_from(const Options& o)
{
    if (o.theta == 0.0) {
        if (!o.q)
            throw ConstraintViolation("theta = 0 needs --q");
        return validate_params(0.0, o.gamma, o.a, *o.q);
    }
    return validate_params(o.theta, o.gamma, o.a, o.b);
}

int cmd_pmf(const Options& o)
{
    check_format(o);
    PfParams law = law_from(o);
    PmfTable t = pmf_table(law, o.n);
    const double th = law.theta();
    const bool scaled_col = th > 0.0 && th < 1.0;

    json dual = nullptr;
    if (law.tag() == PfCase::A1) {
        std::size_t m = std::min<std::size_t>(o.n, 1000);
        std::vector<double> c = pmf_from_coefficients(law, m);
        double worst = 0.0;
        for (std::size_t k = 0; k <= m; ++k)
            if (c[k] != t.p[k])
                worst = std::max(worst, std::abs(t.p[k] - c[k]) / std::abs(c[k]));
        dual = {{"max_rel_dev", worst}, {"n_max", m}};
    }

    Sink sink(o.out);
    std::ostream& os = sink.os();
    if (o.format == "csv") {
        os << "n,p_n,cdf" << (scaled_col ? ",n^(2+theta)*p_n" : "") << "\n";
        for (std::size_t k = 0; k < t.p.size(); ++k) {
            os << k << "," << g17(t.p[k]) << "," << g17(t.cdf[k]);
            if (scaled_col)
                os << "," << g17(std::pow(static_cast<double>(k), 2.0 + th) * t.p[k]);
            os << "\n";
        }
        os << "# schema_version=" << kSchemaVersion << "\n";
        os << "# law=" << law.describe() << "\n";
        os << "# tail=" << g17(t.tail) << "\n";
        if (!dual.is_null())
            os << "# dual_oracle_max_rel_dev=" << g17(dual["max_rel_dev"].get<double>())
               << " n_max=" << dual["n_max"].get<std::size_t>() << "\n";
    } else {
        json rows = json::array();
        for (std::size_t k = 0; k < t.p.size(); ++k) {
            json r = {k, t.p[k], t.cdf[k]};
            if (scaled_col)
                r.push_back(std::pow(static_cast<double>(k), 2.0 + th) * t.p[k]);
            rows.push_back(r);
        }
        json cols = {"n", "p_n", "cdf"};
        if (scaled_col)
            cols.push_back("n^(2+theta)*p_n");
        json j = {{"schema_version", kSchemaVersion}, {"law", law.describe()}, {"columns", cols},
                  {"rows", rows}, {"tail", t.tail}, {"dual_oracle", dual}};
        os << j.dump(1) << "\n";
    }
    return 0;
}

int cmd_pgf(const Options& o)
{
    check_format(o);
    PfParams law = law_from(o);
    std::vector<double> grid = parse_grid(o.grid.empty() ? "0:1:11" : o.grid);
    PfParams it = iterate_params(law, o.n);
    Sink sink(o.out);
    std::ostream& os = sink.os();
    json rows = json::array();
    if (o.format == "csv")
        os << "s,f(s),f_n(s)\n";
    for (double s : grid) {
        double f = pgf_eval(law, s), fn = pgf_eval(it, s);
        if (o.format == "csv")
            os << g17(s) << "," << g17(f) << "," << g17(fn) << "\n";
        else
            rows.push_back({s, f, fn});
    }
    if (o.format == "csv")
        os << "# schema_version=" << kSchemaVersion << "\n# law=" << law.describe() << "\n# n=" << o.n
           << "\n# iterate=" << it.describe() << "\n";
    else
        os << json{{"schema_version", kSchemaVersion}, {"law", law.describe()}, {"n", o.n},
                   {"iterate", it.describe()}, {"columns", {"s", "f(s)", "f_n(s)"}}, {"rows", rows}}
                  .dump(1)
           << "\n";
    return 0;
}

int cmd_transform(const Options& o)
{
    check_format(o);
    CpfParams law = cpf(o.theta, o.a, o.b);
    std::vector<double> grid = parse_grid(o.grid.empty() ? "0.1,0.5,1,2,5" : o.grid);
    Sink sink(o.out);
    std::ostream& os = sink.os();
    json rows = json::array();
    if (o.format == "csv")
        os << "u,phi(u)\n";
    for (double u : grid) {
        double phi = cpf_laplace(law, u);
        if (o.format == "csv")
            os << g17(u) << "," << g17(phi) << "\n";
        else
            rows.push_back({u, phi});
    }
    if (o.format == "csv")
        os << "# schema_version=" << kSchemaVersion << "\n# law=" << law.describe() << "\n";
    else
        os << json{{"schema_version", kSchemaVersion}, {"law", law.describe()}, {"columns", {"u", "phi(u)"}},
                   {"rows", rows}}
                  .dump(1)
           << "\n";
    return 0;
}

int cmd_verify(const Options& o)
{
    if (o.suite.empty())
        throw UnknownSuite("no suite given; one of pmf-dual, tail, conjugation, gw-fixed, cpf, gw-re-super, "
                           "gw-re-sub, gw-re-critical, decomposition, mbp");
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), o.suite) == names.end())
        throw UnknownSuite("unknown suite: " + o.suite);
    SuiteOptions so;
    so.seed = o.seed;
    so.width = o.threads;
    so.scale = o.budget;
    SimReport rep = run_suite(o.suite, so);
    Sink sink(o.out);
    sink.os() << rep.to_json(o.timing).dump(1) << "\n";
    for (const auto& v : rep.verdicts)
        std::cerr << (v.passed ? "PASS " : "FAIL ") << v.criterion << ": " << v.detail << "\n";
    for (const auto& t : rep.tests)
        std::cerr << (t.passed ? "PASS " : "FAIL ") << t.name << ": p = " << format_g(t.p_value, 3) << "\n";
    return rep.all_passed() ? 0 : 1;
}

struct Replicate {
    std::uint64_t final_size = 0;
    double extinction_time = -1.0;
    bool exploded = false;
};

struct Aggregate {
    std::string name;
    double value;
    double se;
    std::optional<double> exact;
};

json aggregate_json(const std::vector<Aggregate>& ag)
{
    json a = json::array();
    for (const auto& x : ag)
        a.push_back({{"name", x.name}, {"value", x.value}, {"se", x.se},
                     {"exact", x.exact ? json(*x.exact) : json(nullptr)}});
    return a;
}

void write_simulation(const Options& o, const json& meta, const std::vector<Replicate>& reps,
                      const std::vector<Aggregate>& ag, const json& environment)
{
    Sink sink(o.out);
    std::ostream& os = sink.os();
    if (o.format == "json") {
        json rows = json::array();
        for (const auto& r : reps)
            rows.push_back({r.final_size, r.extinction_time, r.exploded});
        json j = meta;
        j["schema_version"] = kSchemaVersion;
        j["columns"] = {"final_size", "extinction_time", "exploded"};
        j["replicates"] = rows;
        j["aggregates"] = aggregate_json(ag);
        if (!environment.is_null())
            j["environment"] = environment;
        os << j.dump(1) << "\n";
        return;
    }
    os << "replicate,final_size,extinction_time,exploded\n";
    for (std::size_t i = 0; i < reps.size(); ++i)
        os << i << "," << reps[i].final_size << "," << g17(reps[i].extinction_time) << ","
           << (reps[i].exploded ? 1 : 0) << "\n";
    os << "# schema_version=" << kSchemaVersion << "\n";
    for (const auto& [k, v] : meta.items())
        os << "# " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    for (const auto& x : ag)
        os << "# " << x.name << "=" << g17(x.value) << " se=" << g17(x.se)
           << (x.exact ? " exact=" + g17(*x.exact) : "") << "\n";
    if (!environment.is_null())
        os << "# environment=" << environment.dump() << "\n";
}

std::vector<Aggregate> summarize(const std::vector<Replicate>& reps, std::optional<double> p_extinct,
                                 std::optional<double> mean)
{
    const double R = static_cast<double>(reps.size());
    double k = 0.0;
    std::vector<double> sizes;
    std::uint64_t exploded = 0;
    for (const auto& r : reps) {
        k += r.final_size == 0;
        exploded += r.exploded;
        sizes.push_back(static_cast<double>(r.final_size));
    }
    double f = k / R;
    MeanSe m = mean_se(sizes);
    return {{"extinction_frequency", f, std::sqrt(f * (1.0 - f) / R), p_extinct},
            {"mean_final_size", m.mean, m.se, mean},
            {"exploded_fraction", static_cast<double>(exploded) / R, 0.0, std::nullopt}};
}

Replicate from_path(const GenerationPath& p)
{
    Replicate r;
    r.final_size = p.z.back();
    r.exploded = p.exploded;
    if (p.extinct())
        r.extinction_time = static_cast<double>(std::find(p.z.begin(), p.z.end(), 0u) - p.z.begin());
    return r;
}

json path_json(const PathIterates& it)
{
    json rows = json::array();
    for (std::size_t k = 0; k <= it.n(); ++k) {
        json r = {{"k", k}, {"Pi", it.pi(k)}, {"R", it.R(k)}, {"R_dual", it.R_dual(k)}};
        if (k > 0) {
            r["A"] = it.steps()[k - 1].a;
            r["B"] = it.steps()[k - 1].b;
        }
        rows.push_back(r);
    }
    PfParams fwd = quenched_generation_law(it, it.n());
    PfParams rev = quenched_generation_law(it, it.n(), true);
    return {{"path", rows},
            {"quenched_law", {{"theta", fwd.theta()}, {"a", fwd.a()}, {"b", fwd.b()}}},
            {"reversed_law", {{"theta", rev.theta()}, {"a", rev.a()}, {"b", rev.b()}}}};
}

int cmd_simulate(const Options& o)
{
    check_format(o);
    if (o.replicates == 0)
        throw ConstraintViolation("replicates >= 1");
    SimPlan plan{"simulate-" + o.model, o.replicates, o.horizon, o.seed, o.threads};
    json meta = {{"model", o.model}, {"seed", o.seed}, {"replicates", o.replicates}};

    if (o.model == "gw") {
        GwFixedModel m = gw_model(validate_params(o.theta, o.gamma, o.a, o.b));
        PathOptions opt;
        opt.population_cap = o.cap;
        auto reps = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
            return from_path(simulate_generation_path(m, o.horizon, eng, opt));
        });
        double exact_mean = std::pow(m.mean(), static_cast<double>(o.horizon));
        meta["offspring"] = m.offspring.describe();
        meta["horizon"] = o.horizon;
        write_simulation(o, meta, reps, summarize(reps, extinction_by(m, o.horizon), exact_mean), nullptr);
        return 0;
    }

    if (o.model == "gwre") {
        if (o.env_spec.empty())
            throw ConstraintViolation("gwre needs --env-spec");
        std::ifstream in(o.env_spec);
        if (!in)
            throw ConstraintViolation("cannot read " + o.env_spec);
        json j = json::parse(in);
        QuenchedPathOptions qo;
        qo.population_cap = o.cap;
        std::optional<std::vector<EnvStep>> frozen;
        double th;
        std::uint64_t horizon = o.horizon;
        std::optional<EnvSpec> spec;
        if (j.contains("steps")) {
            // An explicit realized environment.
            if (!j.contains("theta") || !j["theta"].is_number() || !j["steps"].is_array())
                throw ConstraintViolation("frozen environment needs numeric theta and a steps array");
            th = j["theta"].get<double>();
            std::vector<EnvStep> steps;
            for (const auto& e : j["steps"]) {
                if (!e.contains("A") || !e.contains("B") || !e["A"].is_number() || !e["B"].is_number())
                    throw ConstraintViolation("steps need numeric A and B");
                steps.push_back({e["A"].get<double>(), e["B"].get<double>()});
                check_env_step(steps.back());
            }
            if (steps.empty())
                throw ConstraintViolation("steps must not be empty");
            horizon = steps.size();
            frozen = std::move(steps);
        } else {
            spec = EnvSpec::from_json(j);
            th = spec->theta();
            if (o.frozen) {
                Engine env = make_stream(o.seed, {0xe17});
                frozen = draw_steps(*spec, horizon, env);
            }
        }
        if (!(th > 0.0 && th <= 1.0))
            throw ConstraintViolation("theta in (0,1]");
        plan.horizon = horizon;
        meta["horizon"] = horizon;
        meta["theta"] = th;
        if (frozen) {
            const auto& steps = *frozen;
            auto reps = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
                return from_path(simulate_quenched_path(th, steps, horizon, eng, qo));
            });
            PathIterates it(th, steps);
            meta["environment_kind"] = "frozen";
            double mean = std::exp(-it.log_pi(horizon) / th);
            write_simulation(o, meta, reps, summarize(reps, quenched_extinction(it, horizon), mean), path_json(it));
        } else {
            auto reps = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
                std::vector<EnvStep> steps = draw_steps(*spec, horizon, eng);
                return from_path(simulate_quenched_path(th, steps, horizon, eng, qo));
            });
            meta["environment_kind"] = "annealed";
            meta["env"] = spec->to_json();
            write_simulation(o, meta, reps, summarize(reps, std::nullopt, std::nullopt), nullptr);
        }
        return 0;
    }

    if (o.model == "mbp") {
        MbpConfig c = mbp_config(o.theta, o.lambda, o.mu);
        if (!o.t || !(*o.t > 0.0) || !std::isfinite(*o.t))
            throw ConstraintViolation("mbp needs --t > 0");
        double t = *o.t;
        MbpOffspringLaw f(c);
        MbpPathOptions mo;
        mo.population_cap = o.cap;
        auto reps = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
            MbpPath p = simulate_mbp(c, f, t, eng, mo);
            Replicate r;
            r.final_size = p.final_size;
            r.extinction_time = p.extinction_time;
            r.exploded = p.overflow;
            return r;
        });
        PfParams law = mbp_marginal(c, t);
        meta["theta"] = c.theta;
        meta["lambda"] = c.lambda;
        meta["mu"] = c.mu;
        meta["nu"] = c.nu;
        meta["m"] = c.m;
        meta["t"] = t;
        meta["marginal"] = law.describe();
        write_simulation(o, meta, reps, summarize(reps, pgf_eval(law, 0.0), std::exp(c.rho() * t / c.theta)), nullptr);
        return 0;
    }
    throw ConstraintViolation("model must be gw, gwre or mbp");
}

void add_output(CLI::App* cmd, Options& o)
{
    cmd->add_option("--out", o.out, "output path, - for stdout");
    cmd->add_option("--format", o.format, "csv or json");
}

void add_law(CLI::App* cmd, Options& o)
{
    cmd->add_option("--theta", o.theta, "theta")->required();
    cmd->add_option("--a", o.a, "a");
    cmd->add_option("--b", o.b, "b");
    cmd->add_option("--gamma", o.gamma, "gamma");
    cmd->add_option("--q", o.q, "fixed point of a theta = 0 law");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Power-fractional distributions and branching processes"};
    app.require_subcommand(1);
    Options o;

    auto* pmf = app.add_subcommand("pmf", "tabulate p_n, the cdf and n^(2+theta) p_n");
    add_law(pmf, o);
    pmf->add_option("--n", o.n, "largest n");
    add_output(pmf, o);

    auto* pgf = app.add_subcommand("pgf", "tabulate f(s) and the n-th iterate on a grid");
    add_law(pgf, o);
    pgf->add_option("--n", o.n, "iterate");
    pgf->add_option("--grid", o.grid, "lo:hi:count or a comma list");
    add_output(pgf, o);

    auto* tr = app.add_subcommand("transform", "tabulate the CPF(theta, a, b) Laplace transform");
    tr->add_option("--theta", o.theta)->required();
    tr->add_option("--a", o.a, "alpha");
    tr->add_option("--b", o.b, "beta");
    tr->add_option("--grid", o.grid, "lo:hi:count or a comma list");
    add_output(tr, o);

    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite,--suite", o.suite, "suite name");
    ver->add_option("--seed", o.seed);
    ver->add_option("--budget", o.budget, "replicate budget scale");
    ver->add_option("--threads", o.threads, "parallel width, 0 for all cores");
    ver->add_flag("--timing", o.timing, "add wall time and width to the report");
    ver->add_option("--out", o.out, "output path, - for stdout");

    auto* sim = app.add_subcommand("simulate", "simulate gw, gwre or mbp replicates");
    sim->add_option("model", o.model, "gw, gwre or mbp")->required();
    sim->add_option("--theta", o.theta);
    sim->add_option("--a", o.a);
    sim->add_option("--b", o.b);
    sim->add_option("--gamma", o.gamma);
    sim->add_option("--lambda", o.lambda, "birth rate (mbp)");
    sim->add_option("--mu", o.mu, "death rate (mbp)");
    sim->add_option("--t", o.t, "time (mbp)");
    sim->add_option("--horizon", o.horizon, "generations (gw, gwre)");
    sim->add_option("--replicates", o.replicates);
    sim->add_option("--seed", o.seed);
    sim->add_option("--env-spec", o.env_spec, "environment JSON (gwre)");
    sim->add_flag("--frozen", o.frozen, "one environment for all replicates (gwre)");
    sim->add_option("--cap", o.cap, "population cap");
    sim->add_option("--threads", o.threads, "parallel width, 0 for all cores");
    add_output(sim, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*pmf)
            return cmd_pmf(o);
        if (*pgf)
            return cmd_pgf(o);
        if (*tr)
            return cmd_transform(o);
        if (*ver)
            return cmd_verify(o);
        if (*sim)
            return cmd_simulate(o);
    } catch (const ConstraintViolation& e) {
        std::cerr << "error: constraint violated: " << e.what() << "\n";
        return 2;
    } catch (const UnknownSuite& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid JSON: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
