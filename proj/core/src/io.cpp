#include "emuchain/io.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace emuchain {

namespace fs = std::filesystem;

namespace {

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
    const auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

template <class T>
T get(const Json& j, const char* key) {
    try {
        return field(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return get<T>(j, key);
}

void check_version(const Json& j) {
    if (j.is_object() && j.contains("format_version")) {
        const auto& v = j.at("format_version");
        if (!v.is_number_integer() || v.get<int>() != format_version) {
            throw FormatError("unsupported format_version " + v.dump());
        }
    }
}

Json versioned(Json j) {
    j["format_version"] = format_version;
    return j;
}

std::vector<double> doubles(const Json& j, const char* key) {
    std::vector<double> out;
    for (const auto& v : field(j, key)) out.push_back(number_from_json(v));
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct ParsedCsv {
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

ParsedCsv parse_csv(std::string_view text) {
    ParsedCsv out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) out.meta[trim(line.substr(1, eq - 1))] = line.substr(eq + 1);
            continue;
        }
        auto cells = split(line, ',');
        if (out.header.empty()) {
            for (auto& c : cells) out.header.push_back(trim(c));
            continue;
        }
        if (cells.size() != out.header.size()) {
            throw FormatError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(out.header.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(parse_double(trim(c)));
            } catch (const FormatError& e) {
                throw FormatError("CSV line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        out.rows.push_back(std::move(row));
        if (end == text.size()) break;
    }
    if (out.header.empty()) throw FormatError("CSV has no header row");
    if (const auto it = out.meta.find("format_version"); it != out.meta.end() && trim(it->second) != "1") {
        throw FormatError("unsupported CSV format_version " + it->second);
    }
    return out;
}

std::string csv_header(const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].find_first_of(",\n#") != std::string::npos) throw FormatError("column name '" + names[i] + "' is not CSV-safe");
        if (i) s += ',';
        s += names[i];
    }
    return s;
}

void csv_rows(std::string& s, const RowMatrix& a, const RowMatrix* b = nullptr) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) s += ',';
            s += format_double(a(i, j));
        }
        if (b) {
            for (Eigen::Index j = 0; j < b->cols(); ++j) {
                s += ',';
                s += format_double((*b)(i, j));
            }
        }
        s += '\n';
    }
}

}  // namespace

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_atomic(const fs::path& path, std::string_view text) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename into '" + path.string() + "': " + ec.message());
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json read_json(const fs::path& path) {
    const std::string text = read_text(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    check_version(j);
    return j;
}

void write_json(const fs::path& path, const Json& j) { write_text_atomic(path, dump_json(j)); }

Json number_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw FormatError("expected a number, got " + j.dump());
}

Json json_of(const InputSpace& space) {
    Json dims = Json::array();
    for (const auto& d : space.dims()) {
        dims.push_back({{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}, {"decision", d.decision}});
    }
    return versioned({{"dimensions", dims}});
}

InputSpace space_from_json(const Json& j) {
    check_version(j);
    std::vector<Dimension> dims;
    for (const auto& d : field(j, "dimensions")) {
        dims.push_back({get<std::string>(d, "name"), get<double>(d, "lower"), get<double>(d, "upper"),
                        get_or<bool>(d, "decision", false)});
    }
    return InputSpace(std::move(dims));
}

Json json_of(const RowMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_json(m(i, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

RowMatrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw FormatError("expected a matrix (array of rows)");
    if (j.empty()) return RowMatrix(0, 0);
    const std::size_t cols = j.front().size();
    RowMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw FormatError("matrix rows have unequal lengths");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number_from_json(j[i][c]);
        }
    }
    return m;
}

std::string design_csv(const DesignSet& design) {
    std::string s = "#format_version=1\n#space=" + json_of(design.space()).dump() + "\n#outputs=" +
                    csv_header(design.output_names()) + "\n";
    auto names = design.space().names();
    names.insert(names.end(), design.output_names().begin(), design.output_names().end());
    s += csv_header(names) + "\n";
    csv_rows(s, design.points(), design.has_responses() ? &design.responses() : nullptr);
    return s;
}

DesignSet design_from_csv(std::string_view text, const InputSpace* fallback_space) {
    const ParsedCsv csv = parse_csv(text);
    InputSpace space;
    if (const auto it = csv.meta.find("space"); it != csv.meta.end()) {
        try {
            space = space_from_json(Json::parse(it->second));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("CSV #space line: ") + e.what());
        }
    } else if (fallback_space) {
        space = *fallback_space;
    } else {
        throw FormatError("CSV has no #space line and no space was supplied");
    }
    const std::size_t d = space.size();
    if (csv.header.size() < d) throw FormatError("CSV has fewer columns than input dimensions");
    for (std::size_t i = 0; i < d; ++i) {
        if (csv.header[i] != space.dim(i).name) {
            throw FormatError("CSV column '" + csv.header[i] + "' does not match dimension '" + space.dim(i).name + "'");
        }
    }
    std::vector<std::string> outputs(csv.header.begin() + static_cast<std::ptrdiff_t>(d), csv.header.end());
    const auto n = static_cast<Eigen::Index>(csv.rows.size());
    RowMatrix points(n, static_cast<Eigen::Index>(d));
    RowMatrix responses(outputs.empty() ? 0 : n, static_cast<Eigen::Index>(outputs.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = csv.rows[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < d; ++c) points(i, static_cast<Eigen::Index>(c)) = row[c];
        for (std::size_t c = 0; c < outputs.size(); ++c) responses(i, static_cast<Eigen::Index>(c)) = row[d + c];
    }
    if (outputs.empty()) return DesignSet(std::move(space), std::move(points));
    return DesignSet(std::move(space), std::move(points), std::move(outputs), std::move(responses));
}

DesignSet read_design_csv(const fs::path& path, const InputSpace* fallback_space) {
    try {
        return design_from_csv(read_text(path), fallback_space);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string matrix_csv(const std::vector<std::string>& columns, const RowMatrix& m) {
    if (static_cast<std::size_t>(m.cols()) != columns.size()) throw InvalidArgument("column names do not match matrix width");
    std::string s = "#format_version=1\n" + csv_header(columns) + "\n";
    csv_rows(s, m);
    return s;
}

CsvTable table_from_csv(std::string_view text) {
    const ParsedCsv csv = parse_csv(text);
    CsvTable t;
    t.columns = csv.header;
    t.values.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(csv.header.size()));
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        for (std::size_t c = 0; c < csv.header.size(); ++c) {
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = csv.rows[i][c];
        }
    }
    return t;
}

CsvTable read_table_csv(const fs::path& path) {
    try {
        return table_from_csv(read_text(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

namespace {

const char* trend_name(TrendBasis t) {
    switch (t) {
        case TrendBasis::constant: return "constant";
        case TrendBasis::linear: return "linear";
        case TrendBasis::quadratic: return "quadratic";
    }
    return "linear";
}

TrendBasis trend_from_name(const std::string& s) {
    if (s == "constant") return TrendBasis::constant;
    if (s == "linear") return TrendBasis::linear;
    if (s == "quadratic") return TrendBasis::quadratic;
    throw FormatError("unknown trend basis '" + s + "'");
}

}  // namespace

Json json_of(const ResidualProcessSpec& r) {
    return {{"variance", r.variance}, {"correlation_lengths", r.correlation_lengths}, {"nugget", r.nugget}};
}

ResidualProcessSpec residual_from_json(const Json& j) {
    ResidualProcessSpec r;
    r.variance = get<double>(j, "variance");
    r.correlation_lengths = get<std::vector<double>>(j, "correlation_lengths");
    r.nugget = get_or<double>(j, "nugget", 0.0);
    return r;
}

Json json_of(const Emulator& em) {
    Json j{{"kind", "emulator"},
           {"output", em.output()},
           {"space", json_of(em.space())},
           {"trend", trend_name(em.trend())},
           {"transform", em.transform() == OutputTransform::log ? "log" : "none"},
           {"residual", json_of(em.residual())},
           {"points", json_of(em.points())},
           {"warnings", em.warnings()}};
    Json y = Json::array();
    for (Eigen::Index i = 0; i < em.responses().size(); ++i) y.push_back(em.responses()(i));
    j["responses"] = y;
    if (em.link()) {
        j["link"] = {{"coarse", json_of(*em.link()->coarse)},
                     {"fixed_rho", em.link()->fixed_rho ? Json(*em.link()->fixed_rho) : Json(nullptr)}};
    } else {
        j["link"] = nullptr;
    }
    return versioned(std::move(j));
}

Emulator emulator_from_json(const Json& j) {
    check_version(j);
    if (get_or<std::string>(j, "kind", "emulator") != "emulator") throw FormatError("document is not an emulator");
    const InputSpace space = space_from_json(field(j, "space"));
    const RowMatrix points = matrix_from_json(field(j, "points"));
    const auto yv = doubles(j, "responses");
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
    std::optional<MultilevelLink> link;
    if (j.contains("link") && !j.at("link").is_null()) {
        const auto& l = j.at("link");
        link = MultilevelLink{std::make_shared<const Emulator>(emulator_from_json(field(l, "coarse"))),
                              l.contains("fixed_rho") && !l.at("fixed_rho").is_null()
                                  ? std::optional<double>(l.at("fixed_rho").get<double>())
                                  : std::nullopt};
    }
    const std::string transform = get_or<std::string>(j, "transform", "none");
    if (transform != "none" && transform != "log") throw FormatError("unknown output transform '" + transform + "'");
    Emulator em(space, points, y, get<std::string>(j, "output"), trend_from_name(get<std::string>(j, "trend")),
                residual_from_json(field(j, "residual")),
                transform == "log" ? OutputTransform::log : OutputTransform::none, link);
    for (const auto& w : get_or<std::vector<std::string>>(j, "warnings", {})) em.add_warning(w);
    return em;
}

Json json_of(const DiscrepancySpec& d) {
    const auto& in = d.internal();
    Json internal{{"variance", in.variance}, {"correlation", json_of(RowMatrix(in.correlation))}};
    if (in.assessed) {
        internal["assessed"] = {{"space", json_of(in.assessed->space)},
                                {"points", json_of(in.assessed->points)},
                                {"variances", json_of(in.assessed->variances)}};
    } else {
        internal["assessed"] = nullptr;
    }
    Json ems = Json::array();
    for (const auto& em : in.variance_emulators) ems.push_back(json_of(*em));
    internal["variance_emulators"] = ems;
    const auto& ex = d.external();
    Json external{{"mode", ex.mode == ExternalMode::relative ? "relative" : "absolute"},
                  {"scale", ex.scale},
                  {"inflation", ex.inflation}};
    return versioned({{"kind", "discrepancy"},
                      {"outputs", d.outputs()},
                      {"internal", internal},
                      {"external", external},
                      {"notes", d.notes()}});
}

DiscrepancySpec discrepancy_from_json(const Json& j) {
    check_version(j);
    const auto outputs = get<std::vector<std::string>>(j, "outputs");
    InternalDiscrepancy in;
    if (j.contains("internal") && !j.at("internal").is_null()) {
        const auto& ij = j.at("internal");
        in.variance = get_or<std::vector<double>>(ij, "variance", {});
        if (ij.contains("correlation") && !ij.at("correlation").is_null()) {
            in.correlation = matrix_from_json(ij.at("correlation"));
        }
        if (ij.contains("assessed") && !ij.at("assessed").is_null()) {
            const auto& a = ij.at("assessed");
            in.assessed = AssessedVariances{space_from_json(field(a, "space")), matrix_from_json(field(a, "points")),
                                            matrix_from_json(field(a, "variances"))};
        }
        if (ij.contains("variance_emulators")) {
            for (const auto& e : ij.at("variance_emulators")) {
                in.variance_emulators.push_back(std::make_shared<const Emulator>(emulator_from_json(e)));
            }
        }
    }
    ExternalDiscrepancy ex;
    if (j.contains("external") && !j.at("external").is_null()) {
        const auto& ej = j.at("external");
        const auto mode = get_or<std::string>(ej, "mode", "relative");
        if (mode != "relative" && mode != "absolute") throw FormatError("unknown external mode '" + mode + "'");
        ex.mode = mode == "relative" ? ExternalMode::relative : ExternalMode::absolute;
        ex.scale = get_or<std::vector<double>>(ej, "scale", {});
        ex.inflation = get_or<double>(ej, "inflation", 1.0);
    } else {
        ex.mode = ExternalMode::absolute;
    }
    DiscrepancySpec d(outputs, std::move(in), std::move(ex));
    for (const auto& n : get_or<std::vector<std::string>>(j, "notes", {})) d.add_note(n);
    return d;
}

PerturbationPlan plan_from_json(const Json& j) {
    check_version(j);
    PerturbationPlan plan;
    plan.replicates = get_or<std::size_t>(j, "replicates", 2);
    for (const auto& t : field(j, "targets")) {
        PerturbationTarget target;
        target.name = get<std::string>(t, "name");
        const auto kind = get_or<std::string>(t, "kind", "parameter");
        if (kind == "parameter") target.kind = PerturbationKind::parameter;
        else if (kind == "forcing") target.kind = PerturbationKind::forcing;
        else if (kind == "state_noise") target.kind = PerturbationKind::state_noise;
        else throw FormatError("unknown perturbation kind '" + kind + "'");
        const auto dist = get_or<std::string>(t, "distribution", "normal");
        if (dist == "normal") target.distribution = PerturbationDistribution::normal;
        else if (dist == "uniform") target.distribution = PerturbationDistribution::uniform;
        else throw FormatError("unknown perturbation distribution '" + dist + "'");
        target.scale = get<double>(t, "scale");
        target.nominal = get_or<double>(t, "nominal", 0.0);
        target.length = get_or<std::size_t>(t, "length", 1);
        plan.targets.push_back(std::move(target));
    }
    plan.validate();
    return plan;
}

std::vector<Observation> observations_from_json(const Json& j) {
    check_version(j);
    std::vector<Observation> out;
    const Json& list = j.is_array() ? j : field(j, "observations");
    for (const auto& o : list) {
        out.push_back({get<std::string>(o, "output"), get<double>(o, "value"), get_or<double>(o, "measurement_variance", 0.0)});
        if (!(out.back().measurement_variance >= 0.0)) throw FormatError("measurement_variance must be >= 0");
    }
    return out;
}

Json json_of(const RetainedDocument& doc) {
    const auto& r = doc.retained;
    Json ems = Json::array();
    for (const auto& em : doc.emulators) ems.push_back(json_of(*em));
    return versioned({{"kind", "retained_space"},
                      {"space", json_of(r.space)},
                      {"points", json_of(r.points)},
                      {"observations", r.observations},
                      {"implausibility", json_of(r.implausibility)},
                      {"cutoff", r.cutoff},
                      {"retained", r.retained},
                      {"retained_count", r.retained_count()},
                      {"notes", r.notes},
                      {"emulators", ems},
                      {"discrepancy", json_of(doc.discrepancy)}});
}

RetainedDocument retained_from_json(const Json& j) {
    check_version(j);
    RetainedDocument doc;
    auto& r = doc.retained;
    r.space = space_from_json(field(j, "space"));
    r.points = matrix_from_json(field(j, "points"));
    r.observations = get<std::vector<std::string>>(j, "observations");
    r.implausibility = matrix_from_json(field(j, "implausibility"));
    r.cutoff = get<double>(j, "cutoff");
    r.retained = get<std::vector<bool>>(j, "retained");
    r.notes = get_or<std::vector<std::string>>(j, "notes", {});
    if (r.retained.size() != static_cast<std::size_t>(r.points.rows())) throw FormatError("retained mask length mismatch");
    for (const auto& e : field(j, "emulators")) doc.emulators.push_back(std::make_shared<const Emulator>(emulator_from_json(e)));
    doc.discrepancy = discrepancy_from_json(field(j, "discrepancy"));
    return doc;
}

namespace {

const char* form_name(UtilityForm f) {
    switch (f) {
        case UtilityForm::linear: return "linear";
        case UtilityForm::log_shifted: return "log_shifted";
        case UtilityForm::negative_exponential: return "negative_exponential";
        case UtilityForm::tabulated: return "tabulated";
    }
    return "linear";
}

}  // namespace

Json json_of(const UtilitySpec& u) {
    Json attrs = Json::array();
    for (const auto& a : u.attributes()) {
        attrs.push_back({{"attribute", a.attribute},
                         {"form", form_name(a.form)},
                         {"shift", a.shift},
                         {"risk", a.risk},
                         {"table_x", a.table_x},
                         {"table_u", a.table_u},
                         {"weight", a.weight},
                         {"sense", a.sense == Sense::maximize ? "maximize" : "minimize"}});
    }
    return versioned({{"kind", "utility"}, {"attributes", attrs}, {"scale", u.scale()}, {"offset", u.offset()}});
}

UtilitySpec utility_from_json(const Json& j) {
    check_version(j);
    std::vector<AttributeUtility> attrs;
    for (const auto& a : field(j, "attributes")) {
        AttributeUtility u;
        u.attribute = get_or<std::string>(a, "attribute", "");
        const auto form = get_or<std::string>(a, "form", "linear");
        if (form == "linear") u.form = UtilityForm::linear;
        else if (form == "log_shifted") u.form = UtilityForm::log_shifted;
        else if (form == "negative_exponential") u.form = UtilityForm::negative_exponential;
        else if (form == "tabulated") u.form = UtilityForm::tabulated;
        else throw FormatError("unknown utility form '" + form + "'");
        u.shift = get_or<double>(a, "shift", 0.0);
        u.risk = get_or<double>(a, "risk", 1.0);
        u.table_x = get_or<std::vector<double>>(a, "table_x", {});
        u.table_u = get_or<std::vector<double>>(a, "table_u", {});
        u.weight = get_or<double>(a, "weight", 1.0);
        const auto sense = get_or<std::string>(a, "sense", "maximize");
        if (sense != "maximize" && sense != "minimize") throw FormatError("unknown sense '" + sense + "'");
        u.sense = sense == "maximize" ? Sense::maximize : Sense::minimize;
        attrs.push_back(std::move(u));
    }
    return UtilitySpec(std::move(attrs), get_or<double>(j, "scale", 1.0), get_or<double>(j, "offset", 0.0));
}

Json json_of(const DecisionTree& t) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes()) {
        Json node{{"label", n.label}};
        switch (n.kind) {
            case TreeNodeKind::decision:
                node["kind"] = "decision";
                node["children"] = n.children;
                node["options"] = n.options;
                break;
            case TreeNodeKind::chance:
                node["kind"] = "chance";
                node["children"] = n.children;
                node["probabilities"] = n.probabilities;
                break;
            case TreeNodeKind::leaf:
                node["kind"] = "leaf";
                node["reward"] = n.reward;
                break;
        }
        nodes.push_back(std::move(node));
    }
    return versioned({{"kind", "decision_tree"}, {"root", t.root()}, {"nodes", nodes}});
}

DecisionTree tree_from_json(const Json& j) {
    check_version(j);
    std::vector<TreeNode> nodes;
    for (const auto& n : field(j, "nodes")) {
        TreeNode node;
        const auto kind = get<std::string>(n, "kind");
        node.label = get_or<std::string>(n, "label", "");
        if (kind == "decision") {
            node.kind = TreeNodeKind::decision;
            node.children = get<std::vector<std::size_t>>(n, "children");
            node.options = get_or<std::vector<std::string>>(n, "options", {});
        } else if (kind == "chance") {
            node.kind = TreeNodeKind::chance;
            node.children = get<std::vector<std::size_t>>(n, "children");
            node.probabilities = get<std::vector<double>>(n, "probabilities");
        } else if (kind == "leaf") {
            node.kind = TreeNodeKind::leaf;
            const auto& r = field(n, "reward");
            node.reward = r.is_array() ? r.get<std::vector<double>>() : std::vector<double>{r.get<double>()};
        } else {
            throw FormatError("unknown tree node kind '" + kind + "'");
        }
        nodes.push_back(std::move(node));
    }
    return DecisionTree(std::move(nodes), get_or<std::size_t>(j, "root", 0));
}

ExogenousSpec exogenous_from_json(const Json& j, const fs::path& base) {
    check_version(j);
    ExogenousSpec exo;
    if (j.contains("inputs")) {
        for (const auto& [name, d] : j.at("inputs").items()) {
            if (d.is_number()) {
                exo.inputs[name] = FixedValue{d.get<double>()};
                continue;
            }
            const auto dist = get<std::string>(d, "dist");
            if (dist == "fixed") exo.inputs[name] = FixedValue{get<double>(d, "value")};
            else if (dist == "uniform") exo.inputs[name] = UniformDistribution{get<double>(d, "lower"), get<double>(d, "upper")};
            else if (dist == "normal") exo.inputs[name] = NormalDistribution{get<double>(d, "mean"), get<double>(d, "sd")};
            else throw FormatError("unknown exogenous distribution '" + dist + "'");
        }
    }
    if (j.contains("empirical")) {
        for (const auto& t : j.at("empirical")) {
            EmpiricalTable table;
            table.sequential = get_or<bool>(t, "sequential", false);
            if (t.contains("file")) {
                const CsvTable csv = read_table_csv(base / get<std::string>(t, "file"));
                table.columns = csv.columns;
                table.rows = csv.values;
            } else {
                table.columns = get<std::vector<std::string>>(t, "columns");
                table.rows = matrix_from_json(field(t, "rows"));
            }
            exo.tables.push_back(std::move(table));
        }
    }
    return exo;
}

DecisionValues decisions_from_json(const Json& j) {
    check_version(j);
    DecisionValues d;
    const Json& obj = j.contains("decisions") ? j.at("decisions") : j;
    for (const auto& [name, v] : obj.items()) {
        if (name == "format_version") continue;
        if (!v.is_number()) throw FormatError("decision '" + name + "' must be a number");
        d[name] = v.get<double>();
    }
    return d;
}

ModelGraph graph_from_json(const Json& j, const fs::path& base) {
    check_version(j);
    std::vector<ModelNode> nodes;
    for (const auto& nj : field(j, "nodes")) {
        ModelNode node;
        node.name = get<std::string>(nj, "name");
        for (const auto& e : field(nj, "emulators")) {
            const Json doc = e.is_string() ? read_json(base / e.get<std::string>()) : e;
            node.emulators.push_back(std::make_shared<const Emulator>(emulator_from_json(doc)));
        }
        if (nj.contains("discrepancy") && !nj.at("discrepancy").is_null()) {
            const auto& dj = nj.at("discrepancy");
            node.discrepancy = discrepancy_from_json(dj.is_string() ? read_json(base / dj.get<std::string>()) : dj);
        } else {
            node.discrepancy = DiscrepancySpec::zero(node.output_names());
        }
        for (const auto& [input, src] : field(nj, "bindings").items()) {
            Binding b{input, ConstantValue{}};
            if (src.is_number()) b.source = ConstantValue{src.get<double>()};
            else if (src.contains("upstream")) {
                const auto ref = src.at("upstream").get<std::string>();
                const auto dot = ref.find('.');
                if (dot == std::string::npos) throw FormatError("upstream binding '" + ref + "' must be node.output");
                b.source = UpstreamRef{ref.substr(0, dot), ref.substr(dot + 1)};
            } else if (src.contains("exogenous")) b.source = ExogenousRef{src.at("exogenous").get<std::string>()};
            else if (src.contains("decision")) b.source = DecisionRef{src.at("decision").get<std::string>()};
            else if (src.contains("constant")) b.source = ConstantValue{src.at("constant").get<double>()};
            else throw FormatError("binding for '" + input + "' has no recognised source");
            node.bindings.push_back(std::move(b));
        }
        nodes.push_back(std::move(node));
    }
    return ModelGraph(std::move(nodes), get_or<std::vector<std::string>>(j, "terminal", {}));
}

ModelGraph read_graph(const fs::path& path) {
    return graph_from_json(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

namespace {

Treatment treatment_from_json(const Json& t) {
    if (t.contains("quantified")) return Quantified{t.at("quantified").get<std::string>()};
    if (t.contains("order_of_magnitude")) {
        const auto& o = t.at("order_of_magnitude");
        return OrderOfMagnitude{get<double>(o, "value"), get_or<std::string>(o, "rationale", "")};
    }
    if (t.contains("ignored")) return Ignored{t.at("ignored").get<std::string>()};
    throw FormatError("treatment must be quantified, order_of_magnitude or ignored");
}

}  // namespace

AnalysisConfig analysis_config_from_json(const Json& j) {
    check_version(j);
    AnalysisConfig c;
    for (const auto& m : get<std::vector<std::string>>(j, "modules")) c.modules.insert(m);
    if (j.contains("treatments")) {
        for (const auto& [kind, t] : j.at("treatments").items()) c.treatments[source_kind_from_string(kind)] = treatment_from_json(t);
    }
    return c;
}

Json json_of(const Manifest& m) {
    Json sources = Json::array();
    for (const auto& s : m.sources()) {
        Json e{{"kind", std::string(to_string(s.kind))}};
        if (const auto* q = std::get_if<Quantified>(&s.treatment)) {
            e["treatment"] = "quantified";
            e["module"] = q->module;
        } else if (const auto* o = std::get_if<OrderOfMagnitude>(&s.treatment)) {
            e["treatment"] = "order_of_magnitude";
            e["value"] = o->value;
            e["rationale"] = o->rationale;
        } else {
            e["treatment"] = "ignored";
            e["rationale"] = std::get<Ignored>(s.treatment).rationale;
        }
        sources.push_back(std::move(e));
    }
    return versioned({{"kind", "manifest"}, {"sources", sources}});
}

Manifest manifest_from_json(const Json& j) {
    check_version(j);
    std::vector<UncertaintySource> sources;
    for (const auto& e : field(j, "sources")) {
        const SourceKind kind = source_kind_from_string(get<std::string>(e, "kind"));
        const auto t = get<std::string>(e, "treatment");
        if (t == "quantified") sources.push_back({kind, Quantified{get<std::string>(e, "module")}});
        else if (t == "order_of_magnitude") sources.push_back({kind, OrderOfMagnitude{get<double>(e, "value"), get<std::string>(e, "rationale")}});
        else if (t == "ignored") sources.push_back({kind, Ignored{get<std::string>(e, "rationale")}});
        else throw FormatError("unknown treatment '" + t + "'");
    }
    return Manifest(std::move(sources));
}

Json json_of(const AuditRecord& r) {
    return {{"timestamp", r.timestamp},
            {"operation", r.operation},
            {"input_hashes", r.input_hashes},
            {"seed", r.seed ? Json(*r.seed) : Json(nullptr)},
            {"output_hash", r.output_hash},
            {"rationale", r.rationale},
            {"previous_hash", r.previous_hash},
            {"hash", r.hash}};
}

AuditRecord audit_record_from_json(const Json& j) {
    AuditRecord r;
    r.timestamp = get<std::string>(j, "timestamp");
    r.operation = get<std::string>(j, "operation");
    r.input_hashes = get<std::vector<std::string>>(j, "input_hashes");
    if (!field(j, "seed").is_null()) r.seed = get<std::uint64_t>(j, "seed");
    r.output_hash = get<std::string>(j, "output_hash");
    r.rationale = get<std::string>(j, "rationale");
    r.previous_hash = get<std::string>(j, "previous_hash");
    r.hash = get<std::string>(j, "hash");
    if (j.size() != 8) throw FormatError("audit record has unexpected fields");
    return r;
}

Json json_of(const LockFile& lock) {
    Json records = Json::array();
    for (const auto& r : lock.audit.records()) records.push_back(json_of(r));
    return versioned({{"kind", "analysis_lock"},
                      {"manifest", lock.manifest ? json_of(*lock.manifest) : Json(nullptr)},
                      {"audit", records}});
}

LockFile lock_from_json(const Json& j) {
    check_version(j);
    LockFile lock;
    if (!field(j, "manifest").is_null()) lock.manifest = manifest_from_json(j.at("manifest"));
    std::vector<AuditRecord> records;
    for (const auto& r : field(j, "audit")) records.push_back(audit_record_from_json(r));
    lock.audit = AuditChain(std::move(records));
    lock.audit.verify();
    if (lock.manifest) {
        const std::string h = sha256_hex(json_of(*lock.manifest).dump());
        const auto& recs = lock.audit.records();
        const auto it = std::find_if(recs.rbegin(), recs.rend(), [](const auto& r) { return r.operation == "manifest"; });
        if (it == recs.rend() || it->output_hash != h) throw IntegrityError("lock manifest does not match its audit record");
    }
    return lock;
}

LockFile read_lock(const fs::path& path) {
    const std::string text = read_text(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(path.string() + " is not valid JSON: " + e.what());
    }
    if (dump_json(j) != text) throw IntegrityError(path.string() + " is not in canonical form");
    try {
        return lock_from_json(j);
    } catch (const IntegrityError&) {
        throw;
    } catch (const Error& e) {
        throw IntegrityError(path.string() + ": " + e.what());
    }
}

void write_lock(const fs::path& path, const LockFile& lock) { write_json(path, json_of(lock)); }

void record_manifest(LockFile& lock, const Manifest& manifest) {
    manifest.require_complete();
    lock.manifest = manifest;
    AuditRecord r;
    r.timestamp = utc_timestamp();
    r.operation = "manifest";
    r.output_hash = sha256_hex(json_of(manifest).dump());
    r.rationale = "uncertainty manifest recorded";
    lock.audit.append(std::move(r));
}

}  // namespace emuchain
