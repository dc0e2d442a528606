#include "mjls/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "mjls/errors.hpp"

namespace mjls {

using detail::json;

namespace {

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
}

std::size_t positive_int(const json& j, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() <= 0) {
        throw ValidationError(what + ": expected a positive integer");
    }
    return j.get<std::size_t>();
}

std::vector<Matrix> family(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw ValidationError(std::string("model file: missing key '") + key + "'");
    }
    const json& j = doc.at(key);
    if (detail::array_depth(j) != 3) {
        throw ValidationError(std::string(key) + ": expected an array of matrices, one per mode");
    }
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(detail::matrix_from_json(j[i], std::string(key) + "_" + std::to_string(i + 1)));
    }
    return out;
}

// T and W may hold one matrix (depth 2) or a list of alternatives (depth 3).
std::vector<Matrix> alternatives(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw ValidationError(std::string("model file: missing key '") + key + "'");
    }
    const json& j = doc.at(key);
    const int depth = detail::array_depth(j);
    if (depth == 2) {
        return {detail::matrix_from_json(j, key)};
    }
    if (depth == 3) {
        std::vector<Matrix> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(detail::matrix_from_json(j[i], std::string(key) + "[" + std::to_string(i + 1) + "]"));
        }
        return out;
    }
    throw ValidationError(std::string(key) + ": expected a matrix or an array of matrices");
}

const std::set<std::string> kTopKeys{"modes", "dims", "A", "B", "H", "Q", "R", "T", "W"};
const std::set<std::string> kDimKeys{"state", "input", "noise"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) {
            throw ValidationError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

json checked_document(const std::string& text) {
    json doc = parse_document(text);
    if (!doc.is_object()) {
        throw ValidationError("model file: top level must be an object");
    }
    reject_unknown(doc, kTopKeys, "model file");
    return doc;
}

} // namespace

ModelBlockCounts count_model_blocks(const std::string& text) {
    const json doc = checked_document(text);
    return {alternatives(doc, "T").size(), alternatives(doc, "W").size()};
}

MjlsModel parse_model(const std::string& text, const ModelSelection& sel) {
    const json doc = checked_document(text);

    MjlsModel model;
    if (!doc.contains("modes") || !doc.contains("dims")) {
        throw ValidationError("model file: 'modes' and 'dims' are required");
    }
    model.num_modes = positive_int(doc.at("modes"), "modes");
    const json& dims = doc.at("dims");
    if (!dims.is_object()) {
        throw ValidationError("dims: expected an object with state, input, noise");
    }
    reject_unknown(dims, kDimKeys, "dims");
    for (const char* k : {"state", "input", "noise"}) {
        if (!dims.contains(k)) {
            throw ValidationError(std::string("dims: missing '") + k + "'");
        }
    }
    model.state_dim = static_cast<Eigen::Index>(positive_int(dims.at("state"), "dims.state"));
    model.input_dim = static_cast<Eigen::Index>(positive_int(dims.at("input"), "dims.input"));
    model.noise_dim = static_cast<Eigen::Index>(positive_int(dims.at("noise"), "dims.noise"));

    model.a = family(doc, "A");
    model.b = family(doc, "B");
    model.h = family(doc, "H");
    model.q = family(doc, "Q");
    model.r = family(doc, "R");

    const auto ts = alternatives(doc, "T");
    const auto ws = alternatives(doc, "W");
    if (sel.transition < 1 || sel.transition > ts.size()) {
        throw ValidationError("transition selection " + std::to_string(sel.transition) + " out of range 1.." +
                              std::to_string(ts.size()));
    }
    if (sel.noise < 1 || sel.noise > ws.size()) {
        throw ValidationError("noise selection " + std::to_string(sel.noise) + " out of range 1.." +
                              std::to_string(ws.size()));
    }
    const Matrix& t = ts[sel.transition - 1];
    if (t.rows() != t.cols()) {
        throw ValidationError("T: must be square");
    }
    model.transition = TransitionMatrix(t);
    model.noise_cov = ws[sel.noise - 1];
    return model;
}

MjlsModel load_model(const std::filesystem::path& path, const ModelSelection& sel) {
    const MjlsModel model = parse_model(read_text_file(path), sel);
    const ValidationReport report = validate_model(model);
    if (!report.ok()) {
        throw ValidationError("invalid model " + path.string() + ": " + report.diagnostics());
    }
    return symmetrized(model);
}

std::string dump_model(const MjlsModel& model) {
    json doc;
    doc["modes"] = model.num_modes;
    doc["dims"] = {{"state", model.state_dim}, {"input", model.input_dim}, {"noise", model.noise_dim}};
    doc["A"] = detail::matrices_to_json(model.a);
    doc["B"] = detail::matrices_to_json(model.b);
    doc["H"] = detail::matrices_to_json(model.h);
    doc["Q"] = detail::matrices_to_json(model.q);
    doc["R"] = detail::matrices_to_json(model.r);
    doc["T"] = detail::matrix_to_json(model.transition.entries());
    doc["W"] = detail::matrix_to_json(model.noise_cov);
    return doc.dump(2) + "\n";
}

void save_model(const MjlsModel& model, const std::filesystem::path& path) {
    write_text_file(path, dump_model(model));
}

Matrix parse_gain(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("gain file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("L")) {
        throw ValidationError("gain file: expected an object with key 'L'");
    }
    reject_unknown(doc, {"L"}, "gain file");
    return detail::matrix_from_json(doc.at("L"), "L");
}

Matrix load_gain(const std::filesystem::path& path) {
    return parse_gain(read_text_file(path));
}

std::string dump_gain(const Matrix& gain) {
    json doc;
    doc["L"] = detail::matrix_to_json(gain);
    return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

} // namespace mjls
