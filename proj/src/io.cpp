#include "calibra/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "calibra/error.hpp"

namespace calibra {

namespace {

std::string_view trim(std::string_view s)
{
    const auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && blank(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && blank(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_view(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> lines = split_view(text, '\n');
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
    }
    while (!lines.empty() && trim(lines.back()).empty()) {
        lines.pop_back();
    }
    return lines;
}

std::string unquote(std::string_view cell)
{
    cell = trim(cell);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
        cell = cell.substr(1, cell.size() - 2);
    }
    return std::string(cell);
}

template <typename Int>
std::optional<Int> parse_integer(std::string_view text)
{
    text = trim(text);
    Int value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

std::string optional_cell(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string();
}

std::string join(const std::vector<std::string>& items, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += items[i];
    }
    return out;
}

template <typename T, typename Fmt>
std::string join_values(const std::vector<T>& values, Fmt fmt)
{
    std::vector<std::string> items;
    items.reserve(values.size());
    for (const auto& v : values) {
        items.push_back(fmt(v));
    }
    return join(items, ", ");
}

std::vector<double> json_doubles(const nlohmann::json& node, const char* what)
{
    if (!node.is_array()) {
        throw ConfigError(std::string("model document: '") + what + "' must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& item : node) {
        if (!item.is_number()) {
            throw ConfigError(std::string("model document: '") + what + "' must be an array of numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

double json_number(const nlohmann::json& params, const char* key)
{
    if (!params.contains(key) || !params.at(key).is_number()) {
        throw ConfigError(std::string("model document: missing numeric parameter '") + key + "'");
    }
    const double v = params.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(std::string("model document: parameter '") + key + "' is not finite");
    }
    return v;
}

bool all_finite(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_probabilities(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
}

std::string xml_escape(std::string_view text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string svg_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string axis_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* const kResultsHeader = "config_id,calibrator,auc_target,rho,n,trial,rmse_ind,rmse_sub,rb_ind,rb_sub,failed";

}  // namespace

std::string format_double(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::optional<double> parse_double(std::string_view text)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

// ---- score files ----------------------------------------------------------

ScoreFile parse_score_file(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty()) {
        throw ConfigError("score file: missing header line");
    }
    ScoreFile file;
    for (auto cell : split_view(lines.front(), ',')) {
        file.header.push_back(unquote(cell));
    }
    if (file.header.empty() || (file.header.size() == 1 && file.header.front().empty())) {
        throw ConfigError("score file: empty header");
    }
    file.has_labels = file.header.back() == "label";
    const std::size_t width = file.header.size();
    const std::size_t dims = width - (file.has_labels ? 1 : 0);
    if (dims < 1 || dims > 2) {
        throw ConfigError("score file: expected 1 or 2 score columns, found " + std::to_string(dims));
    }
    const std::size_t rows = lines.size() - 1;
    if (rows == 0) {
        throw ConfigError("score file: no data rows");
    }
    file.data.scores.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto cells = split_view(lines[r + 1], ',');
        const std::string where = "score file line " + std::to_string(r + 2);
        if (cells.size() != width) {
            throw ConfigError(where + ": expected " + std::to_string(width) + " cells, found " +
                              std::to_string(cells.size()));
        }
        std::vector<std::string> raw;
        for (std::size_t j = 0; j < width; ++j) {
            raw.emplace_back(trim(cells[j]));
        }
        for (std::size_t j = 0; j < dims; ++j) {
            const auto v = parse_double(cells[j]);
            if (!v || !std::isfinite(*v)) {
                throw ConfigError(where + ": score '" + raw[j] + "' is not a finite number");
            }
            file.data.scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
        }
        if (file.has_labels) {
            const std::string& label = raw.back();
            if (label != "0" && label != "1") {
                throw ConfigError(where + ": label must be 0 or 1, found '" + label + "'");
            }
            file.data.labels.push_back(label == "1" ? 1 : 0);
        }
        file.cells.push_back(std::move(raw));
    }
    return file;
}

ScoreFile read_score_file(const std::filesystem::path& path)
{
    return parse_score_file(read_text_file(path));
}

// ---- models ---------------------------------------------------------------

nlohmann::json model_to_json(const CalibratorModel& model)
{
    nlohmann::json params;
    if (const auto* m = std::get_if<PlattModel>(&model)) {
        params = {{"a", m->a}, {"b", m->b}};
    } else if (const auto* m = std::get_if<LogisticModel>(&model)) {
        params = {{"weights", std::vector<double>(m->weights.data(), m->weights.data() + m->weights.size())},
                  {"intercept", m->intercept},
                  {"degree", m->degree},
                  {"ridge", m->ridge},
                  {"input_dims", m->input_dims},
                  {"separated", m->separated}};
    } else if (const auto* m = std::get_if<IsotonicModel>(&model)) {
        params = {{"knots", m->knots}, {"values", m->values}};
    } else if (const auto* m = std::get_if<BinningModel>(&model)) {
        params = {{"edges", m->edges}, {"posteriors", m->posteriors}};
    }
    return {{"format", "calibra-model"},
            {"version", kModelFormatVersion},
            {"method", std::string(method_name(model))},
            {"params", params}};
}

CalibratorModel model_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object() || doc.value("format", std::string()) != "calibra-model") {
        throw ConfigError("model document: format tag 'calibra-model' missing");
    }
    if (!doc.contains("version") || !doc.at("version").is_number_integer() ||
        doc.at("version").get<int>() != kModelFormatVersion) {
        throw ConfigError("model document: unsupported version (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    if (!doc.contains("params") || !doc.at("params").is_object()) {
        throw ConfigError("model document: 'params' object missing");
    }
    const std::string method = doc.value("method", std::string());
    const nlohmann::json& params = doc.at("params");

    if (method == "platt") {
        return PlattModel{json_number(params, "a"), json_number(params, "b")};
    }
    if (method == "logreg") {
        LogisticModel m;
        const std::vector<double> w = json_doubles(params.value("weights", nlohmann::json()), "weights");
        m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.intercept = json_number(params, "intercept");
        m.ridge = json_number(params, "ridge");
        const double degree = json_number(params, "degree");
        const double dims = json_number(params, "input_dims");
        if ((degree != 1.0 && degree != 2.0) || (dims != 1.0 && dims != 2.0)) {
            throw ConfigError("model document: logreg needs degree and input_dims in {1, 2}");
        }
        m.degree = static_cast<int>(degree);
        m.input_dims = static_cast<std::size_t>(dims);
        m.separated = params.value("separated", false);
        const std::size_t features = m.degree == 1 ? m.input_dims : (m.input_dims == 1 ? 2 : 5);
        if (w.size() != features || !all_finite(w)) {
            throw ConfigError("model document: logreg needs " + std::to_string(features) + " finite weights");
        }
        return m;
    }
    if (method == "isotonic") {
        IsotonicModel m{json_doubles(params.value("knots", nlohmann::json()), "knots"),
                        json_doubles(params.value("values", nlohmann::json()), "values")};
        if (m.knots.empty() || m.knots.size() != m.values.size() || !all_finite(m.knots) ||
            !std::is_sorted(m.knots.begin(), m.knots.end(), std::less_equal<>()) ||
            !std::is_sorted(m.values.begin(), m.values.end()) || !all_probabilities(m.values)) {
            throw ConfigError("model document: isotonic needs strictly increasing knots and nondecreasing "
                              "values in [0, 1] of the same length");
        }
        return m;
    }
    if (method == "binning") {
        BinningModel m{json_doubles(params.value("edges", nlohmann::json()), "edges"),
                       json_doubles(params.value("posteriors", nlohmann::json()), "posteriors")};
        if (m.posteriors.size() < 1 || m.edges.size() != m.posteriors.size() + 1 || !all_finite(m.edges) ||
            !std::is_sorted(m.edges.begin(), m.edges.end(), std::less_equal<>()) ||
            !all_probabilities(m.posteriors)) {
            throw ConfigError("model document: binning needs k + 1 strictly increasing edges and k posteriors in "
                              "[0, 1]");
        }
        return m;
    }
    throw ConfigError("model document: unknown method '" + method + "'");
}

// ---- run configuration ----------------------------------------------------

RunConfig parse_run_config(std::string_view text, std::optional<std::string> preset_override,
                           std::optional<GridMode> mode_override)
{
    // Strip comments so inline "; note" after a value is allowed.
    std::string cleaned;
    for (auto line : lines_of(text)) {
        const std::size_t cut = line.find_first_of(";#");
        cleaned += std::string(line.substr(0, cut));
        cleaned += '\n';
    }
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(cleaned);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }

    const std::map<std::string, std::set<std::string>> schema = {
        {"grid",
         {"mode", "preset", "configs", "auc_targets", "rho_values", "n_values", "trials", "ind_test_size",
          "master_seed", "standardize_seed", "ridge", "threads"}},
        {"calibrators", {"set"}},
        {"output", {"dir"}},
    };
    for (const auto& [section, body] : tree) {
        const auto known = schema.find(section);
        if (known == schema.end()) {
            throw ConfigError("config: unknown section [" + section + "]");
        }
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("config: key '" + section + "' outside any section");
        }
        for (const auto& [key, value] : body) {
            if (!known->second.contains(key)) {
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            }
        }
    }

    const auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (const auto v = tree.get_optional<std::string>(path)) {
            return std::string(trim(*v));
        }
        return std::nullopt;
    };
    const auto list = [&](const std::string& path) {
        std::vector<std::string> items;
        const std::string raw = *get(path);
        if (trim(raw).empty()) {
            return items;
        }
        for (auto item : split_view(raw, ',')) {
            const auto t = trim(item);
            if (t.empty()) {
                throw ConfigError("config: empty list item in '" + path + "'");
            }
            items.emplace_back(t);
        }
        return items;
    };
    const auto number = [&](const std::string& path, std::string_view text) {
        const auto v = parse_double(text);
        if (!v || !std::isfinite(*v)) {
            throw ConfigError("config: '" + path + "' expects a number, got '" + std::string(text) + "'");
        }
        return *v;
    };
    const auto count = [&](const std::string& path, std::string_view text) {
        const auto v = parse_integer<std::uint64_t>(text);
        if (!v) {
            throw ConfigError("config: '" + path + "' expects a nonnegative integer, got '" + std::string(text) + "'");
        }
        return *v;
    };

    RunConfig config;
    GridMode mode = GridMode::single;
    if (mode_override) {
        mode = *mode_override;
    } else if (const auto m = get("grid.mode")) {
        mode = parse_grid_mode(*m);
    }
    config.preset = preset_override ? preset_override : get("grid.preset");
    config.grid = config.preset ? preset_grid(*config.preset, mode) : paper_grid(mode);

    GridSpec& g = config.grid;
    if (get("grid.configs")) {
        g.configs = list("grid.configs");
    }
    if (get("grid.auc_targets")) {
        g.auc_targets.clear();
        for (const auto& item : list("grid.auc_targets")) {
            g.auc_targets.push_back(number("grid.auc_targets", item));
        }
    }
    if (get("grid.rho_values")) {
        g.rho_values.clear();
        for (const auto& item : list("grid.rho_values")) {
            g.rho_values.push_back(number("grid.rho_values", item));
        }
    }
    if (get("grid.n_values")) {
        g.n_values.clear();
        for (const auto& item : list("grid.n_values")) {
            g.n_values.push_back(static_cast<std::size_t>(count("grid.n_values", item)));
        }
    }
    if (const auto v = get("grid.trials")) {
        g.trials = static_cast<std::size_t>(count("grid.trials", *v));
    }
    if (const auto v = get("grid.ind_test_size")) {
        g.ind_test_size = static_cast<std::size_t>(count("grid.ind_test_size", *v));
    }
    if (const auto v = get("grid.master_seed")) {
        g.master_seed = count("grid.master_seed", *v);
    }
    if (const auto v = get("grid.standardize_seed")) {
        g.standardize_seed = count("grid.standardize_seed", *v);
    }
    if (const auto v = get("grid.ridge")) {
        g.ridge = number("grid.ridge", *v);
    }
    if (const auto v = get("grid.threads")) {
        g.threads = static_cast<std::size_t>(count("grid.threads", *v));
    }
    if (get("calibrators.set")) {
        g.calibrators = list("calibrators.set");
    }
    if (const auto v = get("output.dir")) {
        config.output_dir = *v;
    }
    g.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::string> preset_override,
                          std::optional<GridMode> mode_override)
{
    return parse_run_config(read_text_file(path), std::move(preset_override), mode_override);
}

std::string serialize_run_config(const RunConfig& config)
{
    const GridSpec& g = config.grid;
    const auto str = [](const std::string& s) { return s; };
    std::ostringstream out;
    out << "[grid]\n";
    out << "mode = " << to_string(g.mode) << "\n";
    if (config.preset) {
        out << "preset = " << *config.preset << "\n";
    }
    out << "configs = " << join_values(g.configs, str) << "\n";
    out << "auc_targets = " << join_values(g.auc_targets, format_double) << "\n";
    out << "rho_values = " << join_values(g.rho_values, format_double) << "\n";
    out << "n_values = " << join_values(g.n_values, [](std::size_t n) { return std::to_string(n); }) << "\n";
    out << "trials = " << g.trials << "\n";
    out << "ind_test_size = " << g.ind_test_size << "\n";
    out << "master_seed = " << g.master_seed << "\n";
    out << "standardize_seed = " << g.standardize_seed << "\n";
    out << "ridge = " << format_double(g.ridge) << "\n";
    out << "threads = " << g.threads << "\n";
    out << "\n[calibrators]\n";
    out << "set = " << join_values(g.calibrators, str) << "\n";
    out << "\n[output]\n";
    out << "dir = " << config.output_dir << "\n";
    return out.str();
}

// ---- results --------------------------------------------------------------

std::string results_csv(const std::vector<EvalRecord>& rows)
{
    std::string out = kResultsHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += r.config_id + ',' + r.calibrator_id + ',' + format_double(r.auc_target) + ',' + optional_cell(r.rho) +
               ',' + std::to_string(r.n) + ',' + std::to_string(r.trial) + ',' + optional_cell(r.rmse_ind) + ',' +
               optional_cell(r.rmse_sub) + ',' + optional_cell(r.rb_ind) + ',' + optional_cell(r.rb_sub) + ',' +
               (r.failed ? "1" : "0") + '\n';
    }
    return out;
}

std::vector<EvalRecord> parse_results_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || trim(lines.front()) != kResultsHeader) {
        throw ConfigError(std::string("results file: header must be '") + kResultsHeader + "'");
    }
    std::vector<EvalRecord> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string where = "results file line " + std::to_string(i + 1);
        const auto cells = split_view(lines[i], ',');
        if (cells.size() != 11) {
            throw ConfigError(where + ": expected 11 cells");
        }
        const auto opt = [&](std::string_view cell) -> std::optional<double> {
            if (trim(cell).empty()) {
                return std::nullopt;
            }
            const auto v = parse_double(cell);
            if (!v) {
                throw ConfigError(where + ": bad number '" + std::string(cell) + "'");
            }
            return v;
        };
        EvalRecord r;
        r.config_id = std::string(trim(cells[0]));
        r.calibrator_id = std::string(trim(cells[1]));
        const auto auc = opt(cells[2]);
        const auto n = parse_integer<std::size_t>(cells[4]);
        const auto trial = parse_integer<std::size_t>(cells[5]);
        const auto failed = trim(cells[10]);
        if (!auc || !n || !trial || (failed != "0" && failed != "1")) {
            throw ConfigError(where + ": malformed auc_target, n, trial or failed cell");
        }
        r.auc_target = *auc;
        r.rho = opt(cells[3]);
        r.n = *n;
        r.trial = *trial;
        r.rmse_ind = opt(cells[6]);
        r.rmse_sub = opt(cells[7]);
        r.rb_ind = opt(cells[8]);
        r.rb_sub = opt(cells[9]);
        r.failed = failed == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string aggregates_csv(const std::vector<AggregateRow>& rows)
{
    std::string out = "config_id,calibrator,auc_target,rho,n,trials,failures,rmse_ind,rmse_sub,rb_ind,rb_sub\n";
    for (const auto& a : rows) {
        out += a.config_id + ',' + a.calibrator_id + ',' + format_double(a.auc_target) + ',' + optional_cell(a.rho) +
               ',' + std::to_string(a.n) + ',' + std::to_string(a.trials) + ',' + std::to_string(a.failures) + ',' +
               optional_cell(a.rmse_ind) + ',' + optional_cell(a.rmse_sub) + ',' + optional_cell(a.rb_ind) + ',' +
               optional_cell(a.rb_sub) + '\n';
    }
    return out;
}

std::string ranks_csv(const ResultTable& table)
{
    std::string out = "config_id,rank\n";
    for (std::size_t i = 0; i < table.pair_rank.size() && i < table.config_ids.size(); ++i) {
        out += table.config_ids[i] + ',' + std::to_string(table.pair_rank[i]) + '\n';
    }
    return out;
}

std::string comparison_csv(const ComparisonTable& table)
{
    std::string out =
        "kind,base,metric,split,config_id,auc_target,rho,n,r1,r2,r12,ratio1,ratio2,flagged,win,points,wins,p\n";
    const auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const auto& r : table.rows) {
        out += "point," + r.base + ',' + r.metric + ',' + r.split + ',' + r.config_id + ',' +
               format_double(r.auc_target) + ',' + format_double(r.rho) + ',' + std::to_string(r.n) + ',' + num(r.r1) +
               ',' + num(r.r2) + ',' + num(r.r12) + ',' + num(r.ratio1) + ',' + num(r.ratio2) + ',' +
               (r.flagged ? "1" : "0") + ',' + (r.win ? "1" : "0") + ",,,\n";
    }
    const auto fraction = [&](const char* kind, const WinFraction& f) {
        out += std::string(kind) + ',' + f.base + ',' + f.metric + ',' + f.split + ",," + optional_cell(f.auc_target) +
               ',' + optional_cell(f.rho) + ',' + (f.n ? std::to_string(*f.n) : std::string()) + ",,,,,,,," +
               std::to_string(f.points) + ',' + std::to_string(f.wins) + ',' + format_double(f.p) + '\n';
    };
    for (const auto& f : table.by_cell) {
        fraction("cell", f);
    }
    for (const auto& f : table.by_n) {
        fraction("n", f);
    }
    return out;
}

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& rows)
{
    using Getter = std::optional<double> EvalRecord::*;
    const std::pair<const char*, Getter> metrics[] = {
        {"rmse_ind", &EvalRecord::rmse_ind},
        {"rmse_sub", &EvalRecord::rmse_sub},
        {"rb_ind", &EvalRecord::rb_ind},
        {"rb_sub", &EvalRecord::rb_sub},
    };
    std::vector<std::string> calibrators;
    for (const auto& r : rows) {
        if (std::find(calibrators.begin(), calibrators.end(), r.calibrator_id) == calibrators.end()) {
            calibrators.push_back(r.calibrator_id);
        }
    }
    std::vector<SummaryRow> out;
    for (const auto& [metric, field] : metrics) {
        for (const auto& calibrator : calibrators) {
            std::map<std::size_t, std::pair<double, std::size_t>> by_n;
            for (const auto& r : rows) {
                if (r.calibrator_id == calibrator && !r.failed && r.*field) {
                    auto& [sum, count] = by_n[r.n];
                    sum += *(r.*field);
                    ++count;
                }
            }
            for (const auto& [n, acc] : by_n) {
                out.push_back({metric, calibrator, n, acc.first / static_cast<double>(acc.second), acc.second});
            }
        }
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows)
{
    std::string out = "metric,calibrator,n,mean,count\n";
    for (const auto& r : rows) {
        out += r.metric + ',' + r.calibrator + ',' + std::to_string(r.n) + ',' + format_double(r.mean) + ',' +
               std::to_string(r.count) + '\n';
    }
    return out;
}

std::string summary_svg(const std::vector<SummaryRow>& rows, std::string_view metric)
{
    std::vector<std::string> calibrators;
    std::vector<const SummaryRow*> selected;
    for (const auto& r : rows) {
        if (r.metric != metric) {
            continue;
        }
        selected.push_back(&r);
        if (std::find(calibrators.begin(), calibrators.end(), r.calibrator) == calibrators.end()) {
            calibrators.push_back(r.calibrator);
        }
    }

    constexpr double width = 720, height = 480;
    constexpr double left = 70, right = 170, top = 40, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    if (!selected.empty()) {
        x_min = y_min = HUGE_VAL;
        x_max = y_max = -HUGE_VAL;
        for (const auto* r : selected) {
            const double x = std::log2(static_cast<double>(std::max<std::size_t>(r->n, 1)));
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, r->mean);
            y_max = std::max(y_max, r->mean);
        }
    }
    if (x_max - x_min <= 0) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    const double pad = std::max(0.05 * (y_max - y_min), 1e-3);
    y_min -= pad;
    y_max += pad;
    const auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    const auto py = [&](double y) { return top + (y_max - y) / (y_max - y_min) * plot_h; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << svg_number(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">mean "
        << xml_escape(metric) << " vs n</text>\n";
    svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n";
    svg << "</g>\n";

    std::set<std::size_t> ns;
    for (const auto* r : selected) {
        ns.insert(r->n);
    }
    svg << "<g font-size=\"11\" text-anchor=\"middle\">\n";
    for (std::size_t n : ns) {
        const double x = px(std::log2(static_cast<double>(std::max<std::size_t>(n, 1))));
        svg << "<text x=\"" << svg_number(x) << "\" y=\"" << svg_number(top + plot_h + 16) << "\">" << n
            << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<g font-size=\"11\" text-anchor=\"end\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        svg << "<text x=\"" << svg_number(left - 6) << "\" y=\"" << svg_number(py(y) + 4) << "\">" << axis_label(y)
            << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<text x=\"" << svg_number(left + plot_w / 2) << "\" y=\"" << svg_number(height - 16)
        << "\" text-anchor=\"middle\" font-size=\"13\">n (per class, log scale)</text>\n";
    svg << "<text x=\"18\" y=\"" << svg_number(top + plot_h / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << svg_number(top + plot_h / 2) << ")\">mean " << xml_escape(metric)
        << "</text>\n";

    for (std::size_t c = 0; c < calibrators.size(); ++c) {
        const char* colour = kPalette[c % kPalette.size()];
        std::string points;
        for (const auto* r : selected) {
            if (r->calibrator != calibrators[c]) {
                continue;
            }
            if (!points.empty()) {
                points += ' ';
            }
            points += svg_number(px(std::log2(static_cast<double>(std::max<std::size_t>(r->n, 1))))) + ',' +
                      svg_number(py(r->mean));
        }
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"" << points
            << "\"><title>" << xml_escape(calibrators[c]) << "</title></polyline>\n";
        const double ly = top + 14 + 18 * static_cast<double>(c);
        svg << "<line x1=\"" << svg_number(left + plot_w + 12) << "\" y1=\"" << svg_number(ly) << "\" x2=\""
            << svg_number(left + plot_w + 36) << "\" y2=\"" << svg_number(ly) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << svg_number(left + plot_w + 42) << "\" y=\"" << svg_number(ly + 4)
            << "\" font-size=\"12\">" << xml_escape(calibrators[c]) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---- files ----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace calibra
