#include "cal/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cal {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto s = std::string(v);
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
        throw ConfigError("bad number for " + std::string(key) + ": '" + s + "'");
    }
    return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
    }
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

void LoopConfig::validate() const {
    constexpr double eps = 1e-12;
    if (!(init_fraction > 0.0 && acquisition_fraction > 0.0)) {
        throw ConfigError("init_fraction and acquisition_fraction must be positive");
    }
    if (init_fraction + acquisition_fraction > budget_fraction + eps || budget_fraction > 1.0 + eps) {
        throw ConfigError("need init_fraction + acquisition_fraction <= budget_fraction <= 1");
    }
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (repr_k < 1) throw ConfigError("repr_k must be at least 1");
    acquisition.validate();
    classifier.validate();
    validate_encoding_selector(analysis_encoding);
}

std::string LoopConfig::strategy_label() const {
    if (!label.empty()) return label;
    std::string out(to_string(acquisition.strategy));
    if (acquisition.strategy != Strategy::cal) return out;
    if (acquisition.cal_direction == CalDirection::argmin) out += "-opposite";
    if (acquisition.cal_neighborhood == CalNeighborhood::per_labeled) out += "-per_labeled";
    if (acquisition.cal_scoring == CalScoring::cross_entropy) out += "-ce";
    if (acquisition.cal_pooling != CalPooling::mean) out += "-" + std::string(to_string(acquisition.cal_pooling));
    if (acquisition.encoding != "model") out += "-" + acquisition.encoding;
    return out;
}

void apply_setting(LoopConfig& c, std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    auto& a = c.acquisition;
    auto& m = c.classifier;
    if (key == "dataset") c.dataset = v;
    else if (key == "features") c.features = v;
    else if (key.starts_with("space.") && key.size() > 6) c.extra_spaces[std::string(key.substr(6))] = v;
    else if (key == "classes") c.classes = static_cast<int>(to_u64(key, v));
    else if (key == "tfidf_min_df") c.tfidf_min_df = to_u64(key, v);
    else if (key == "feature_space") c.feature_space = v;
    else if (key == "budget_fraction") c.budget_fraction = to_double(key, v);
    else if (key == "init_fraction") c.init_fraction = to_double(key, v);
    else if (key == "acquisition_fraction") c.acquisition_fraction = to_double(key, v);
    else if (key == "seeds" || key == "seed") {
        c.seeds.clear();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) c.seeds.push_back(to_u64(key, trim(item)));
    }
    else if (key == "strategy") a.strategy = parse_strategy(v);
    else if (key == "k") a.k = to_u64(key, v);
    else if (key == "cal_direction") a.cal_direction = parse_cal_direction(v);
    else if (key == "cal_pooling") a.cal_pooling = parse_cal_pooling(v);
    else if (key == "cal_scoring") a.cal_scoring = parse_cal_scoring(v);
    else if (key == "cal_neighborhood") a.cal_neighborhood = parse_cal_neighborhood(v);
    else if (key == "cal_distance_weight") a.cal_distance_weight = to_double(key, v);
    else if (key == "encoding") a.encoding = v;
    else if (key == "kmeans_normalize") a.kmeans_normalize = to_bool(key, v);
    else if (key == "kmeans_iters") a.kmeans_iters = to_u64(key, v);
    else if (key == "hidden_dim") m.hidden_dim = to_u64(key, v);
    else if (key == "learning_rate") m.learning_rate = to_double(key, v);
    else if (key == "momentum") m.momentum = to_double(key, v);
    else if (key == "epochs") m.epochs = to_u64(key, v);
    else if (key == "batch_size") m.batch_size = to_u64(key, v);
    else if (key == "evals_per_epoch") m.evals_per_epoch = to_u64(key, v);
    else if (key == "l2_penalty") m.l2_penalty = to_double(key, v);
    else if (key == "analysis_encoding") c.analysis_encoding = v;
    else if (key == "repr_k") c.repr_k = to_u64(key, v);
    else if (key == "repr_mode") {
        if (v == "inverse_mean_distance") c.repr_mode = ReprMode::inverse_mean_distance;
        else if (v == "literal") c.repr_mode = ReprMode::literal;
        else throw ConfigError("unknown repr_mode '" + v + "'");
    }
    else if (key == "label") c.label = v;
    else if (key == "record_timing") c.record_timing = to_bool(key, v);
    else if (key == "dump_scores") c.dump_scores = to_bool(key, v);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

LoopConfig parse_config(std::string_view text, LoopConfig config, const std::filesystem::path& base_dir) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(std::string_view(body).substr(0, eq));
        const auto value = trim(std::string_view(body).substr(eq + 1));
        try {
            apply_setting(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
        if (key == "dataset") config.dataset = resolve(base_dir, value);
        else if (key == "features") config.features = resolve(base_dir, value);
        else if (key.starts_with("space.")) config.extra_spaces[key.substr(6)] = resolve(base_dir, value);
    }
    return config;
}

LoopConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), LoopConfig{}, path.parent_path());
}

std::vector<std::pair<std::string, std::string>> config_entries(const LoopConfig& c) {
    const auto& a = c.acquisition;
    const auto& m = c.classifier;
    std::string seeds;
    for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    std::vector<std::pair<std::string, std::string>> out = {
        {"dataset", c.dataset.string()},
        {"features", c.features.string()},
        {"classes", std::to_string(c.classes)},
        {"tfidf_min_df", std::to_string(c.tfidf_min_df)},
        {"feature_space", c.feature_space},
        {"budget_fraction", fmt_double(c.budget_fraction)},
        {"init_fraction", fmt_double(c.init_fraction)},
        {"acquisition_fraction", fmt_double(c.acquisition_fraction)},
        {"seeds", seeds},
        {"strategy", std::string(to_string(a.strategy))},
        {"k", std::to_string(a.k)},
        {"cal_direction", std::string(to_string(a.cal_direction))},
        {"cal_pooling", std::string(to_string(a.cal_pooling))},
        {"cal_scoring", std::string(to_string(a.cal_scoring))},
        {"cal_neighborhood", std::string(to_string(a.cal_neighborhood))},
        {"cal_distance_weight", fmt_double(a.cal_distance_weight)},
        {"encoding", a.encoding},
        {"kmeans_normalize", a.kmeans_normalize ? "true" : "false"},
        {"kmeans_iters", std::to_string(a.kmeans_iters)},
        {"hidden_dim", std::to_string(m.hidden_dim)},
        {"learning_rate", fmt_double(m.learning_rate)},
        {"momentum", fmt_double(m.momentum)},
        {"epochs", std::to_string(m.epochs)},
        {"batch_size", std::to_string(m.batch_size)},
        {"evals_per_epoch", std::to_string(m.evals_per_epoch)},
        {"l2_penalty", fmt_double(m.l2_penalty)},
        {"analysis_encoding", c.analysis_encoding},
        {"repr_k", std::to_string(c.repr_k)},
        {"repr_mode", c.repr_mode == ReprMode::literal ? "literal" : "inverse_mean_distance"},
        {"label", c.label},
        {"record_timing", c.record_timing ? "true" : "false"},
        {"dump_scores", c.dump_scores ? "true" : "false"},
    };
    for (const auto& [name, path] : c.extra_spaces) out.emplace_back("space." + name, path.string());
    return out;
}

BudgetPlan plan_budget(const LoopConfig& config, std::size_t pool_size) {
    auto count = [&](double fraction) {
        return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool_size)));
    };
    BudgetPlan plan;
    plan.pool_size = pool_size;
    plan.initial = count(config.init_fraction);
    plan.batch = count(config.acquisition_fraction);
    plan.budget = std::min(count(config.budget_fraction), pool_size);
    if (plan.batch == 0) throw ConfigError("acquisition size rounds to zero for a pool of " + std::to_string(pool_size));
    plan.iterations = plan.budget > plan.initial ? (plan.budget - plan.initial) / plan.batch : 0;
    if (plan.iterations < 1) {
        throw ConfigError("budget allows no acquisition iteration for a pool of " + std::to_string(pool_size));
    }
    return plan;
}

}  // namespace cal
