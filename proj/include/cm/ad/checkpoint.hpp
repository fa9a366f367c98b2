#pragma once

#include <string>

#include <json.hpp>

#include "cm/ad/optimizer.hpp"
#include "cm/ad/param_store.hpp"

namespace cm::ad {

// Checkpoint layout: one JSON header line terminated by '\n', then a raw
// little-endian blob. The header lists every tensor as
// {name, rows, cols, dtype:"f64", offset} with offsets measured from the
// first byte after the newline; values are stored column-major. Optimizer
// moments ride along under "adamw.m." / "adamw.v." name prefixes.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::json& extra, const AdamW* opt = nullptr);

// Loads into an existing store; every stored tensor must match a parameter
// by name and shape. Returns the header's "extra" object.
nlohmann::json load_checkpoint(const std::string& path, ParamStore& params,
                               AdamW* opt = nullptr);

// Reads only the header line and returns its "extra" object.
nlohmann::json peek_checkpoint_extra(const std::string& path);

}  // namespace cm::ad
