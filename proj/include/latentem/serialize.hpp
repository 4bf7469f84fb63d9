// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <json.hpp>
#include <string>

#include "latentem/colatent.hpp"
#include "latentem/errors.hpp"
#include "latentem/latent.hpp"
#include "latentem/network.hpp"

namespace latentem {

// Insertion-ordered JSON keeps serialized output byte-stable.
using Json = nlohmann::ordered_json;

namespace detail {

inline Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

/// Emissions and memberships are stored group-major: one array per group,
/// each running over the categories.
inline Json columns_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index g = 0; g < m.cols(); ++g) {
        Json column = Json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) column.push_back(m(i, g));
        out.push_back(std::move(column));
    }
    return out;
}

inline Json rows_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        out.push_back(std::move(row));
    }
    return out;
}

inline Vector vector_from_json(const Json& j) {
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i];
    return v;
}

inline Matrix columns_from_json(const Json& j) {
    if (j.empty() || j[0].empty()) throw ParseError("empty matrix in model JSON");
    Matrix m(static_cast<Eigen::Index>(j[0].size()), static_cast<Eigen::Index>(j.size()));
    for (std::size_t g = 0; g < j.size(); ++g) {
        if (j[g].size() != j[0].size())
            throw ParseError("ragged matrix in model JSON");
        for (std::size_t i = 0; i < j[g].size(); ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = j[g][i];
    }
    return m;
}

inline Matrix rows_from_json(const Json& j) {
    return columns_from_json(j).transpose();
}

}  // namespace detail

inline Json to_json(const LatentModel& model) {
    return Json{{"type", "latent"},
                {"rho", detail::vector_to_json(model.rho)},
                {"A", detail::columns_to_json(model.A)},
                {"B", detail::columns_to_json(model.B)}};
}

inline Json to_json(const CoLatentModel& model) {
    return Json{{"type", "colatent"},
                {"C", detail::rows_to_json(model.C)},
                {"A", detail::columns_to_json(model.A)},
                {"B", detail::columns_to_json(model.B)}};
}

inline Json to_json(const NetworkLatentModel& model) {
    return Json{{"type", "network_latent"},
                {"f", detail::vector_to_json(model.f)},
                {"rho", detail::vector_to_json(model.rho)},
                {"Z", detail::columns_to_json(model.Z)}};
}

inline Json to_json(const NetworkCoModel& model) {
    return Json{{"type", "network_co"},
                {"variant", to_string(model.variant)},
                {"C", detail::rows_to_json(model.C)},
                {"A", detail::columns_to_json(model.A)}};
}

inline NetworkVariant variant_from_string(const std::string& name) {
    if (name == "general") return NetworkVariant::general;
    if (name == "symmetric") return NetworkVariant::symmetric;
    if (name == "mh") return NetworkVariant::marginally_homogeneous;
    throw ConfigError("unknown variant '" + name + "'");
}

inline std::string model_type(const Json& j) {
    if (!j.contains("type")) throw ParseError("model JSON lacks a type field");
    return j.at("type").get<std::string>();
}

inline LatentModel latent_model_from_json(const Json& j) {
    if (model_type(j) != "latent") throw ParseError("not a latent model");
    LatentModel model{detail::vector_from_json(j.at("rho")),
                      detail::columns_from_json(j.at("A")),
                      detail::columns_from_json(j.at("B"))};
    validate(model);
    return model;
}

inline CoLatentModel colatent_model_from_json(const Json& j) {
    if (model_type(j) != "colatent") throw ParseError("not a co-latent model");
    CoLatentModel model{detail::rows_from_json(j.at("C")),
                        detail::columns_from_json(j.at("A")),
                        detail::columns_from_json(j.at("B"))};
    validate(model);
    return model;
}

inline NetworkLatentModel network_latent_model_from_json(const Json& j) {
    if (model_type(j) != "network_latent") throw ParseError("not a network model");
    NetworkLatentModel model{detail::columns_from_json(j.at("Z")),
                             detail::vector_from_json(j.at("rho")),
                             detail::vector_from_json(j.at("f"))};
    validate(model);
    return model;
}

inline NetworkCoModel network_co_model_from_json(const Json& j) {
    if (model_type(j) != "network_co") throw ParseError("not a shared-emission model");
    NetworkCoModel model{detail::rows_from_json(j.at("C")),
                         detail::columns_from_json(j.at("A")),
                         variant_from_string(j.at("variant").get<std::string>())};
    validate(model);
    return model;
}

}  // namespace latentem
