#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "softrank/generator.hpp"
#include "softrank/io.hpp"

namespace softrank {

inline constexpr const char* kModelFormat = "softrank-knockoff-generator";
inline constexpr int kModelVersion = 1;

namespace detail {

using nlohmann::json;

inline json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline json matrix_json(const Matrix& m) {
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

inline Vector json_vector(const json& j, const char* what) {
    if (!j.is_array()) throw IoError(std::string("model: '") + what + "' must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

inline Matrix json_matrix(const json& j, Index rows, Index cols, const char* what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
        throw IoError(std::string("model: '") + what + "' has the wrong row count");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
            throw IoError(std::string("model: '") + what + "' has a row of the wrong length");
        for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json training_config_json(const TrainingConfig& cfg) {
    return {
        {"epsilon", cfg.epsilon},
        {"lambda_so", cfg.lambda_so},
        {"delta_corr", cfg.delta_corr},
        {"learning_rate", cfg.learning_rate},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"seed", cfg.seed},
        {"bandwidths", cfg.kernel.bandwidths},
        {"sinkhorn_iterations", cfg.sinkhorn_iterations},
        {"halton_start", cfg.halton_start},
        {"momentum", cfg.momentum},
        {"hidden_layers", cfg.architecture.hidden_layers},
        {"hidden_multiplier", cfg.architecture.hidden_multiplier},
        {"leaky_slope", cfg.architecture.leaky_slope},
    };
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j) {
    TrainingConfig cfg;
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.lambda_so = j.at("lambda_so").get<double>();
    cfg.delta_corr = j.at("delta_corr").get<double>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.batch_size = j.at("batch_size").get<Index>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.kernel.bandwidths = j.at("bandwidths").get<std::vector<double>>();
    cfg.sinkhorn_iterations = j.at("sinkhorn_iterations").get<int>();
    cfg.halton_start = j.at("halton_start").get<std::int64_t>();
    cfg.momentum = j.at("momentum").get<double>();
    cfg.architecture.hidden_layers = j.at("hidden_layers").get<int>();
    cfg.architecture.hidden_multiplier = j.at("hidden_multiplier").get<int>();
    cfg.architecture.leaky_slope = j.at("leaky_slope").get<double>();
    return cfg;
}

/// Self-describing JSON document. Doubles are written in shortest
/// round-trip form, so loading reproduces every value bit for bit.
inline nlohmann::json model_json(const TrainedGenerator& model) {
    using detail::json;
    json layers = json::array();
    for (std::size_t l = 0; l < model.params.num_layers(); ++l)
        layers.push_back({{"weights", detail::matrix_json(model.params.weights[l])},
                          {"biases", detail::vector_json(model.params.biases[l])}});
    return {
        {"format", kModelFormat},
        {"version", kModelVersion},
        {"architecture",
         {{"layer_dims", model.params.layer_dims},
          {"activation", model.params.activation},
          {"leaky_slope", model.params.leaky_slope}}},
        {"seed", model.config.seed},
        {"config", training_config_json(model.config)},
        {"standardizer",
         {{"mean", detail::vector_json(model.standardizer.mean)},
          {"scale", detail::vector_json(model.standardizer.scale)}}},
        {"s_star",
         {{"s", detail::vector_json(model.s_star.s)},
          {"feasibility_gap", model.s_star.feasibility_gap},
          {"objective", model.s_star.objective}}},
        {"layers", layers},
    };
}

inline TrainedGenerator model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat) throw IoError("model: unrecognized format tag");
        if (j.at("version").get<int>() != kModelVersion) throw IoError("model: unsupported version");
        TrainedGenerator model;
        const auto& arch = j.at("architecture");
        model.params.layer_dims = arch.at("layer_dims").get<std::vector<Index>>();
        model.params.activation = arch.at("activation").get<std::string>();
        model.params.leaky_slope = arch.at("leaky_slope").get<double>();
        model.config = training_config_from_json(j.at("config"));
        const auto& layers = j.at("layers");
        const auto& dims = model.params.layer_dims;
        if (dims.size() < 2 || layers.size() + 1 != dims.size()) throw IoError("model: layer list does not match dims");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            model.params.weights.push_back(detail::json_matrix(layers[l].at("weights"), dims[l], dims[l + 1], "weights"));
            model.params.biases.push_back(detail::json_vector(layers[l].at("biases"), "biases"));
        }
        model.params.validate();
        model.standardizer.mean = detail::json_vector(j.at("standardizer").at("mean"), "mean");
        model.standardizer.scale = detail::json_vector(j.at("standardizer").at("scale"), "scale");
        model.s_star.s = detail::json_vector(j.at("s_star").at("s"), "s");
        model.s_star.feasibility_gap = j.at("s_star").at("feasibility_gap").get<double>();
        model.s_star.objective = j.at("s_star").at("objective").get<double>();
        const Index d = model.params.output_dim();
        if (model.standardizer.mean.size() != d || model.standardizer.scale.size() != d || model.s_star.s.size() != d)
            throw IoError("model: standardizer or s* length does not match the network");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model: ") + e.what());
    } catch (const InvalidInput& e) {
        throw IoError(std::string("model: ") + e.what());
    }
}

inline void save_model(const TrainedGenerator& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << model_json(model).dump(1) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline TrainedGenerator load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

}  // namespace softrank
