#pragma once

#include <iosfwd>
#include <string>

#include "vagtm/trainer.hpp"

namespace vagtm {

// Versioned text checkpoint: header `VAGTM 1`, then the sections [config],
// [vocab], [encoder], [topics], [flow] (vagtm-ip only) and [log]. Arrays are
// row-major decimal blocks introduced by a `name rows cols` shape line.
// Doubles are printed with 17 significant digits, so write -> read -> write
// is byte-identical.

std::string format_checkpoint(const ModelCheckpoint& checkpoint);
ModelCheckpoint parse_checkpoint(std::istream& in);

void write_checkpoint(const ModelCheckpoint& checkpoint,
                      const std::string& path);
ModelCheckpoint read_checkpoint(const std::string& path);

// %.17g, shared by every writer that emits checkpoint-grade decimals.
std::string format_double(Scalar value);

}  // namespace vagtm
