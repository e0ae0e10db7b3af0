#include "nsal/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace nsal {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Walks a config document while remembering where each value came from, so
/// that semantic errors can be reported with a line number.
class Reader {
public:
    Reader(std::string_view text, std::string_view source) : text_(text), source_(source) {}

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
        std::string dotted;
        for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
        std::ostringstream os;
        os << source_ << ':' << locate(path) << ": " << (dotted.empty() ? "" : dotted + ": ") << message;
        throw ConfigError(os.str());
    }

    void expect_keys(const json& obj, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
        if (!obj.is_object()) fail(path, "expected an object");
        for (const auto& [key, value] : obj.items()) {
            if (!allowed.count(key)) {
                auto p = path;
                p.push_back(key);
                fail(p, "unknown key");
            }
        }
    }

    std::size_t count(const json& v, const std::vector<std::string>& path, std::size_t min_value = 0) const {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
            fail(path, "expected a non-negative integer");
        const auto n = v.get<std::size_t>();
        if (n < min_value) fail(path, "must be >= " + std::to_string(min_value));
        return n;
    }

    double number(const json& v, const std::vector<std::string>& path) const {
        if (!v.is_number()) fail(path, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(path, "expected a finite number");
        return x;
    }

    bool boolean(const json& v, const std::vector<std::string>& path) const {
        if (!v.is_boolean()) fail(path, "expected true or false");
        return v.get<bool>();
    }

    std::vector<std::size_t> count_list(const json& v, const std::vector<std::string>& path, std::size_t min_value,
                                        bool allow_scalar) const {
        std::vector<std::size_t> out;
        if (allow_scalar && v.is_number()) {
            out.push_back(count(v, path, min_value));
            return out;
        }
        if (!v.is_array()) fail(path, "expected a list of integers");
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(count(v[i], with(path, i), min_value));
        return out;
    }

    std::vector<double> number_list(const json& v, const std::vector<std::string>& path) const {
        if (!v.is_array()) fail(path, "expected a list of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], with(path, i)));
        return out;
    }

    StrategyKind strategy(const json& v, const std::vector<std::string>& path) const {
        if (!v.is_string()) fail(path, "expected a strategy name");
        try {
            return parse_strategy_kind(v.get<std::string>());
        } catch (const std::invalid_argument& e) {
            fail(path, e.what());
        }
    }

    static std::vector<std::string> with(std::vector<std::string> path, const std::string& key) {
        path.push_back(key);
        return path;
    }
    static std::vector<std::string> with(std::vector<std::string> path, std::size_t index) {
        if (path.empty()) path.push_back("[" + std::to_string(index) + "]");
        else path.back() += "[" + std::to_string(index) + "]";
        return path;
    }

private:
    std::size_t locate(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        std::size_t found = 0;
        for (const auto& component : path) {
            const std::string key = "\"" + component.substr(0, component.find('[')) + "\"";
            const auto at = text_.find(key, pos);
            if (at == std::string_view::npos) break;
            found = pos = at;
        }
        return line_of_offset(text_, found);
    }

    std::string_view text_;
    std::string_view source_;
};

ExperimentConfig read_experiment(const json& doc, const Reader& in, SweepSpec& sweep) {
    using P = std::vector<std::string>;
    in.expect_keys(doc, {}, {"schema_version", "population", "strategies", "nsrs", "guardrail", "model", "n_init",
                             "batch_sizes", "rounds", "batch_size", "positive_set", "replications", "seed",
                             "histogram_bins", "sweep", "description"});
    if (doc.contains("schema_version") && in.count(doc["schema_version"], {"schema_version"}) != kSchemaVersion)
        in.fail({"schema_version"}, "unsupported schema version");

    ExperimentConfig cfg;

    if (!doc.contains("population")) in.fail({}, "missing 'population'");
    const json& pop = doc["population"];
    in.expect_keys(pop, {"population"}, {"N", "K", "class_rates", "class_means", "feature_sigma"});
    for (const char* key : {"N", "class_rates", "class_means"})
        if (!pop.contains(key)) in.fail({"population"}, std::string("missing '") + key + "'");
    auto& ps = cfg.population;
    ps.N = in.count(pop["N"], {"population", "N"}, 1);
    ps.class_rates = in.number_list(pop["class_rates"], {"population", "class_rates"});
    ps.K = pop.contains("K") ? in.count(pop["K"], {"population", "K"}, 2) : ps.class_rates.size();
    if (ps.class_rates.size() != ps.K) in.fail({"population", "class_rates"}, "must have K entries");
    const json& means = pop["class_means"];
    if (!means.is_array() || means.size() != ps.K) in.fail({"population", "class_means"}, "expected K rows");
    std::size_t dim = 0;
    for (std::size_t k = 0; k < ps.K; ++k) {
        const auto row = in.number_list(means[k], Reader::with(P{"population", "class_means"}, k));
        if (k == 0) {
            dim = row.size();
            if (dim < 1) in.fail({"population", "class_means"}, "feature dimension must be >= 1");
            ps.class_means.resize(static_cast<Eigen::Index>(ps.K), static_cast<Eigen::Index>(dim));
        }
        if (row.size() != dim) in.fail({"population", "class_means"}, "rows must share one dimension");
        for (std::size_t j = 0; j < dim; ++j)
            ps.class_means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = row[j];
    }
    if (pop.contains("feature_sigma")) ps.feature_sigma = in.number(pop["feature_sigma"], {"population", "feature_sigma"});
    try {
        ps.validate();
    } catch (const std::invalid_argument& e) {
        in.fail({"population"}, e.what());
    }

    NsrsParams nsrs;
    if (doc.contains("nsrs")) {
        const json& n = doc["nsrs"];
        in.expect_keys(n, {"nsrs"}, {"depth", "n_threshold", "max_candidates"});
        if (n.contains("depth")) nsrs.depth_limit = static_cast<int>(in.count(n["depth"], {"nsrs", "depth"}, 1));
        if (n.contains("n_threshold")) nsrs.n_threshold = in.count(n["n_threshold"], {"nsrs", "n_threshold"}, 1);
        if (n.contains("max_candidates"))
            nsrs.max_candidates = in.count(n["max_candidates"], {"nsrs", "max_candidates"}, 1);
    }
    if (doc.contains("guardrail")) nsrs.guardrail = in.boolean(doc["guardrail"], {"guardrail"});

    if (!doc.contains("strategies")) in.fail({}, "missing 'strategies'");
    const json& strategies = doc["strategies"];
    if (!strategies.is_array() || strategies.empty()) in.fail({"strategies"}, "expected a nonempty list");
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        const auto kind = in.strategy(strategies[i], Reader::with(P{"strategies"}, i));
        for (const auto& s : cfg.strategies)
            if (s.kind == kind) in.fail({"strategies"}, "duplicate strategy");
        cfg.strategies.push_back(kind == StrategyKind::NSRS ? QueryStrategy::neyman(nsrs)
                                 : kind == StrategyKind::SRS ? QueryStrategy::simple_random()
                                                             : QueryStrategy::uncertainty_entropy());
    }

    if (doc.contains("model")) {
        const json& m = doc["model"];
        if (!m.is_object() || !m.contains("type") || !m["type"].is_string())
            in.fail({"model"}, "expected an object with a 'type'");
        const auto type = m["type"].get<std::string>();
        if (type == "oracle") {
            in.expect_keys(m, {"model"}, {"type", "sigma", "gamma"});
            cfg.model.kind = ModelConfig::Kind::Oracle;
            if (m.contains("sigma")) cfg.model.oracle.noise_sigma = in.number(m["sigma"], {"model", "sigma"});
            if (m.contains("gamma")) cfg.model.oracle.miscalibration_gamma = in.number(m["gamma"], {"model", "gamma"});
            try {
                cfg.model.oracle.validate();
            } catch (const std::invalid_argument& e) {
                in.fail({"model"}, e.what());
            }
        } else if (type == "logistic") {
            in.expect_keys(m, {"model"}, {"type", "learning_rate", "epochs", "l2", "batch_size", "decay", "decay_every"});
            cfg.model.kind = ModelConfig::Kind::Logistic;
            auto& h = cfg.model.logistic;
            if (m.contains("learning_rate")) h.learning_rate = in.number(m["learning_rate"], {"model", "learning_rate"});
            if (m.contains("epochs")) h.epochs = static_cast<int>(in.count(m["epochs"], {"model", "epochs"}));
            if (m.contains("l2")) h.l2 = in.number(m["l2"], {"model", "l2"});
            if (m.contains("batch_size")) h.batch_size = in.count(m["batch_size"], {"model", "batch_size"});
            if (m.contains("decay")) h.decay = in.number(m["decay"], {"model", "decay"});
            if (m.contains("decay_every"))
                h.decay_every = static_cast<int>(in.count(m["decay_every"], {"model", "decay_every"}));
            if (!(h.learning_rate > 0) || h.l2 < 0 || !(h.decay > 0))
                in.fail({"model"}, "learning_rate and decay must be > 0 and l2 >= 0");
        } else {
            in.fail({"model", "type"}, "expected 'oracle' or 'logistic'");
        }
    }

    if (doc.contains("n_init")) cfg.n_init = in.count_list(doc["n_init"], {"n_init"}, 0, true);
    if (cfg.n_init.empty()) in.fail({"n_init"}, "must list at least one value");

    if (doc.contains("batch_sizes")) {
        if (doc.contains("rounds") || doc.contains("batch_size"))
            in.fail({"batch_sizes"}, "give either batch_sizes or rounds + batch_size");
        cfg.batch_sizes = in.count_list(doc["batch_sizes"], {"batch_sizes"}, 1, false);
    } else {
        if (!doc.contains("rounds") || !doc.contains("batch_size"))
            in.fail({}, "missing 'batch_sizes' (or 'rounds' and 'batch_size')");
        const auto T = in.count(doc["rounds"], {"rounds"}, 1);
        cfg.batch_sizes.assign(T, in.count(doc["batch_size"], {"batch_size"}, 1));
    }
    if (cfg.batch_sizes.empty()) in.fail({"batch_sizes"}, "at least one round is required");

    if (doc.contains("positive_set")) {
        const auto raw = in.count_list(doc["positive_set"], {"positive_set"}, 0, true);
        cfg.positive_set.assign(raw.begin(), raw.end());
    }
    try {
        cfg.positive_set = validate_positive_set(cfg.positive_set, ps.K);
    } catch (const std::invalid_argument& e) {
        in.fail({"positive_set"}, e.what());
    }

    if (doc.contains("replications")) cfg.replications = in.count(doc["replications"], {"replications"}, 1);
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
            in.fail({"seed"}, "expected an unsigned 64-bit integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("histogram_bins")) cfg.histogram_bins = in.count(doc["histogram_bins"], {"histogram_bins"}, 2);

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        in.fail({"batch_sizes"}, e.what());
    }

    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        in.expect_keys(s, {"sweep"}, {"axes", "max_points"});
        if (s.contains("max_points")) sweep.max_points = in.count(s["max_points"], {"sweep", "max_points"}, 1);
        if (s.contains("axes")) {
            const json& axes = s["axes"];
            in.expect_keys(axes, {"sweep", "axes"}, {"n_init", "sigma", "gamma", "strategy"});
            if (axes.contains("n_init")) sweep.n_init = in.count_list(axes["n_init"], {"sweep", "axes", "n_init"}, 0, false);
            if (axes.contains("sigma")) sweep.sigma = in.number_list(axes["sigma"], {"sweep", "axes", "sigma"});
            if (axes.contains("gamma")) sweep.gamma = in.number_list(axes["gamma"], {"sweep", "axes", "gamma"});
            if (axes.contains("strategy")) {
                const json& list = axes["strategy"];
                if (!list.is_array()) in.fail({"sweep", "axes", "strategy"}, "expected a list");
                for (std::size_t i = 0; i < list.size(); ++i)
                    sweep.strategy.push_back(in.strategy(list[i], Reader::with(P{"sweep", "axes", "strategy"}, i)));
            }
        }
    }
    return cfg;
}

ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json vector_json(const std::vector<double>& xs) {
    ordered_json out = ordered_json::array();
    for (double x : xs) out.push_back(number_or_null(x));
    return out;
}

std::vector<double> vector_from(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.is_null() ? kNaN : v.get<double>());
    return out;
}

ordered_json round_aggregate_json(const RoundAggregate& a) {
    ordered_json j;
    j["strategy"] = std::string(to_string(a.kind));
    j["round"] = a.round;
    j["class"] = a.cls;
    j["batch_size"] = a.batch_size;
    j["count"] = a.count;
    j["true_rate"] = number_or_null(a.true_rate);
    j["mean_estimate"] = number_or_null(a.mean_estimate);
    j["bias"] = number_or_null(a.bias);
    j["empirical_variance"] = number_or_null(a.empirical_variance);
    j["mean_variance_est"] = number_or_null(a.mean_variance_est);
    j["mean_design_variance"] = number_or_null(a.mean_design_variance);
    j["srs_reference"] = number_or_null(a.srs_reference);
    j["variance_ratio_vs_srs"] = number_or_null(a.variance_ratio_vs_srs);
    j["matched_variance_budget"] = number_or_null(a.matched_variance_budget);
    j["mean_fresh"] = number_or_null(a.mean_fresh);
    j["mean_cumulative_labeled"] = number_or_null(a.mean_cumulative_labeled);
    return j;
}

ordered_json aggregates_json(const Aggregates& agg) {
    ordered_json j;
    j["n_init"] = agg.n_init;
    j["rounds"] = ordered_json::array();
    for (const auto& a : agg.rounds) j["rounds"].push_back(round_aggregate_json(a));
    j["finals"] = ordered_json::array();
    for (const auto& f : agg.finals) {
        ordered_json o;
        o["strategy"] = std::string(to_string(f.kind));
        o["class"] = f.cls;
        o["count"] = f.count;
        o["true_rate"] = number_or_null(f.true_rate);
        o["mean_estimate"] = number_or_null(f.mean_estimate);
        o["bias"] = number_or_null(f.bias);
        o["empirical_variance"] = number_or_null(f.empirical_variance);
        o["standard_error"] = number_or_null(f.standard_error);
        o["mean_variance_est"] = number_or_null(f.mean_variance_est);
        j["finals"].push_back(std::move(o));
    }
    j["histograms"] = ordered_json::array();
    for (const auto& h : agg.histograms) {
        ordered_json o;
        o["strategy"] = std::string(to_string(h.kind));
        o["round"] = h.round;
        o["counts"] = h.counts;
        j["histograms"].push_back(std::move(o));
    }
    return j;
}

void append_csv_field(std::string& line, const std::string& field) {
    if (!line.empty()) line += ',';
    line += field;
}

}  // namespace

std::size_t SweepSpec::points() const {
    auto axis = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
    return axis(n_init.size()) * axis(sigma.size()) * axis(gamma.size()) * axis(strategy.size());
}

ParsedConfig parse_config(std::string_view text, std::string_view source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << source << ':' << line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1) << ": invalid JSON: " << e.what();
        throw ConfigError(os.str());
    }
    // A run manifest embeds the exact config it ran with.
    if (doc.is_object() && doc.value("kind", "") == "nsal-manifest" && doc.contains("config")) doc = doc["config"];
    if (!doc.is_object()) throw ConfigError(std::string(source) + ":1: expected a JSON object");

    const Reader reader(text, source);
    ParsedConfig out;
    out.experiment = read_experiment(doc, reader, out.sweep);
    out.document = config_to_json(out.experiment);
    return out;
}

ParsedConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ":0: cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

ordered_json config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    ordered_json pop;
    pop["N"] = c.population.N;
    pop["K"] = c.population.K;
    pop["class_rates"] = c.population.class_rates;
    ordered_json means = ordered_json::array();
    for (Eigen::Index k = 0; k < c.population.class_means.rows(); ++k) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index d = 0; d < c.population.class_means.cols(); ++d) row.push_back(c.population.class_means(k, d));
        means.push_back(std::move(row));
    }
    pop["class_means"] = std::move(means);
    pop["feature_sigma"] = c.population.feature_sigma;
    j["population"] = std::move(pop);

    j["strategies"] = ordered_json::array();
    NsrsParams nsrs;
    for (const auto& s : c.strategies) {
        j["strategies"].push_back(std::string(to_string(s.kind)));
        if (s.nsrs) nsrs = *s.nsrs;
    }
    j["nsrs"] = {{"depth", nsrs.depth_limit}, {"n_threshold", nsrs.n_threshold}, {"max_candidates", nsrs.max_candidates}};
    j["guardrail"] = nsrs.guardrail;
    if (c.model.kind == ModelConfig::Kind::Oracle) {
        j["model"] = {{"type", "oracle"},
                      {"sigma", c.model.oracle.noise_sigma},
                      {"gamma", c.model.oracle.miscalibration_gamma}};
    } else {
        const auto& h = c.model.logistic;
        j["model"] = {{"type", "logistic"}, {"learning_rate", h.learning_rate}, {"epochs", h.epochs},
                      {"l2", h.l2},         {"batch_size", h.batch_size},       {"decay", h.decay},
                      {"decay_every", h.decay_every}};
    }
    j["n_init"] = c.n_init;
    j["batch_sizes"] = c.batch_sizes;
    j["positive_set"] = c.positive_set;
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["histogram_bins"] = c.histogram_bins;
    return j;
}

ordered_json report_to_json(const RunReport& report) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "nsal-run-report";
    j["config"] = config_to_json(report.config);
    j["replications"] = report.config.replications;
    j["notes"] = {
        {"combined_variance", "approximate: rounds treated as independent"},
        {"ues_estimate", "plain mean of all labels collected so far; not design-unbiased"},
        {"srs_reference", "p(1-p)/n with the true class rate"},
        {"matched_variance_budget", "batch size times the empirical variance ratio vs SRS (1/n scaling)"},
        {"optimizer", "full-batch gradient descent with step decay (logistic model only)"},
    };
    j["aggregates"] = aggregates_json(report.main);
    j["cold_start"] = ordered_json::array();
    for (const auto& a : report.cold_start) j["cold_start"].push_back(aggregates_json(a));

    ordered_json records = ordered_json::array();
    for (const auto& r : report.records) {
        ordered_json rec;
        rec["index"] = r.index;
        rec["n_init"] = r.n_init;
        rec["seed"] = r.seed;
        rec["true_rates"] = vector_json(r.true_rates);
        rec["runs"] = ordered_json::array();
        for (const auto& run : r.runs) {
            ordered_json o;
            o["strategy"] = std::string(to_string(run.kind));
            o["complete"] = run.complete;
            o["final_estimate"] = vector_json(run.final_estimate);
            o["final_variance_est"] = vector_json(run.final_variance_est);
            o["rounds"] = ordered_json::array();
            for (const auto& rr : run.rounds) {
                ordered_json x;
                x["round"] = rr.round;
                x["batch_size"] = rr.batch_size;
                x["estimate"] = vector_json(rr.estimate);
                x["variance_est"] = vector_json(rr.variance_est);
                x["design_variance"] = vector_json(rr.design_variance);
                x["fresh"] = rr.fresh;
                x["reused"] = rr.reused;
                x["cumulative_labeled"] = rr.cumulative_labeled;
                x["strata"] = rr.strata;
                x["histogram"] = rr.histogram;
                o["rounds"].push_back(std::move(x));
            }
            rec["runs"].push_back(std::move(o));
        }
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    return j;
}

RunReport report_from_json(const json& doc) {
    if (!doc.is_object() || doc.value("kind", "") != "nsal-run-report")
        throw ConfigError("report: not an nsal run report");
    if (doc.value("schema_version", 0) != kSchemaVersion) throw ConfigError("report: unsupported schema version");
    RunReport report;
    const std::string config_text = doc.at("config").dump();
    SweepSpec unused;
    report.config = read_experiment(json::parse(config_text), Reader(config_text, "report.json#config"), unused);
    for (const auto& r : doc.at("records")) {
        ReplicationRecord rec;
        rec.index = r.at("index").get<std::size_t>();
        rec.n_init = r.at("n_init").get<std::size_t>();
        rec.seed = r.at("seed").get<std::uint64_t>();
        rec.true_rates = vector_from(r.at("true_rates"));
        for (const auto& o : r.at("runs")) {
            StrategyRun run;
            run.kind = parse_strategy_kind(o.at("strategy").get<std::string>());
            run.complete = o.at("complete").get<bool>();
            run.final_estimate = vector_from(o.at("final_estimate"));
            run.final_variance_est = vector_from(o.at("final_variance_est"));
            for (const auto& x : o.at("rounds")) {
                RoundRecord rr;
                rr.round = x.at("round").get<int>();
                rr.batch_size = x.at("batch_size").get<std::size_t>();
                rr.estimate = vector_from(x.at("estimate"));
                rr.variance_est = vector_from(x.at("variance_est"));
                rr.design_variance = vector_from(x.at("design_variance"));
                rr.fresh = x.at("fresh").get<std::size_t>();
                rr.reused = x.at("reused").get<std::size_t>();
                rr.cumulative_labeled = x.at("cumulative_labeled").get<std::size_t>();
                rr.strata = x.at("strata").get<std::size_t>();
                rr.histogram = x.at("histogram").get<std::vector<std::size_t>>();
                run.rounds.push_back(std::move(rr));
            }
            rec.runs.push_back(std::move(run));
        }
        report.records.push_back(std::move(rec));
    }
    reaggregate(report);
    return report;
}

std::string format_number(double value) {
    if (!std::isfinite(value)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

std::string summary_csv(const RunReport& report) {
    std::string out =
        "schema_version,strategy,round,class,batch_size,replications,true_rate,estimate,bias,variance_est,"
        "design_variance,empirical_variance,srs_reference,variance_ratio_vs_srs,matched_variance_budget,cost_fresh,"
        "cumulative_labeled\n";
    for (const auto& a : report.main.rounds) {
        std::string line;
        append_csv_field(line, std::to_string(kSchemaVersion));
        append_csv_field(line, std::string(to_string(a.kind)));
        append_csv_field(line, std::to_string(a.round));
        append_csv_field(line, std::to_string(a.cls));
        append_csv_field(line, std::to_string(a.batch_size));
        append_csv_field(line, std::to_string(a.count));
        for (double v : {a.true_rate, a.mean_estimate, a.bias, a.mean_variance_est, a.mean_design_variance,
                         a.empirical_variance, a.srs_reference, a.variance_ratio_vs_srs, a.matched_variance_budget,
                         a.mean_fresh, a.mean_cumulative_labeled})
            append_csv_field(line, format_number(v));
        out += line + '\n';
    }
    return out;
}

std::string histogram_csv(const RunReport& report) {
    std::string out = "schema_version,strategy,round,bin,lower,upper,count,fraction\n";
    for (const auto& h : report.main.histograms) {
        std::size_t total = 0;
        for (auto c : h.counts) total += c;
        const double bins = static_cast<double>(h.counts.size());
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            std::string line;
            append_csv_field(line, std::to_string(kSchemaVersion));
            append_csv_field(line, std::string(to_string(h.kind)));
            append_csv_field(line, std::to_string(h.round));
            append_csv_field(line, std::to_string(b));
            append_csv_field(line, format_number(static_cast<double>(b) / bins));
            append_csv_field(line, format_number(static_cast<double>(b + 1) / bins));
            append_csv_field(line, std::to_string(h.counts[b]));
            append_csv_field(line, format_number(total ? static_cast<double>(h.counts[b]) / static_cast<double>(total) : kNaN));
            out += line + '\n';
        }
    }
    return out;
}

std::string sweep_csv_header() {
    return "schema_version,point,n_init,sigma,gamma,strategy,round,class,estimate,bias,empirical_variance,"
           "variance_est,design_variance,variance_ratio_vs_srs,cost_fresh\n";
}

std::string sweep_csv_rows(std::size_t point, const ExperimentConfig& config, const RunReport& report) {
    const bool oracle = config.model.kind == ModelConfig::Kind::Oracle;
    std::string out;
    for (const auto& a : report.main.rounds) {
        std::string line;
        append_csv_field(line, std::to_string(kSchemaVersion));
        append_csv_field(line, std::to_string(point));
        append_csv_field(line, std::to_string(config.n_init.front()));
        append_csv_field(line, oracle ? format_number(config.model.oracle.noise_sigma) : std::string());
        append_csv_field(line, oracle ? format_number(config.model.oracle.miscalibration_gamma) : std::string());
        append_csv_field(line, std::string(to_string(a.kind)));
        append_csv_field(line, std::to_string(a.round));
        append_csv_field(line, std::to_string(a.cls));
        for (double v : {a.mean_estimate, a.bias, a.empirical_variance, a.mean_variance_est, a.mean_design_variance,
                         a.variance_ratio_vs_srs, a.mean_fresh})
            append_csv_field(line, format_number(v));
        out += line + '\n';
    }
    return out;
}

}  // namespace nsal
