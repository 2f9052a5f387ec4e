#pragma once

#include "wassdro/program.hpp"

#include <string>

namespace wassdro::conic {

enum class ExportFormat { Cbf, SdpaSparse };

/// Serializes the program (CBF version 1 or SDPA sparse). SDPA sparse has
/// no second-order cone domain and rejects programs containing one; Zero
/// blocks are emitted as paired inequality rows in a diagonal block.
std::string export_program(const ConicProgram& prog, ExportFormat format);

/// Parses a document produced by export_program (same subset of the two
/// grammars). Blocks come back in file order: scalar cones first for CBF,
/// declaration order for SDPA.
ConicProgram import_program(const std::string& text, ExportFormat format);

/// Conventional file extension, ".cbf" or ".dat-s".
const char* export_extension(ExportFormat format);

}  // namespace wassdro::conic
