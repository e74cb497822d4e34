#pragma once

#include <string>

#include <json.hpp>

#include "actseq/estimator.hpp"

namespace actseq {

/// Writes a fitted bundle: manifest.json plus pi.csv, theta.csv and (semi-
/// Markov) hazard.csv in long format with 17-significant-digit values, so a
/// reload reproduces every cell bit-for-bit. `provenance` is merged into the
/// manifest (seeds, config hash, source paths); it must not contain values
/// that change between identical runs.
void save_model(const ModelParams& params, const std::string& dir,
                const nlohmann::ordered_json& provenance = {});

/// Loads and validates a bundle written by save_model.
ModelParams load_model(const std::string& dir);

/// The manifest of a saved bundle, for callers that need provenance only.
nlohmann::ordered_json load_manifest(const std::string& dir);

}  // namespace actseq
