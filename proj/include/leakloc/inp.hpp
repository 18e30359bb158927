#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "leakloc/network.hpp"

namespace leakloc {

/// One non-blank, non-comment line of an INP section.
struct InpRecord {
    std::size_t line = 0;
    std::vector<std::string> tokens;
    std::string comment;  // text after ';', without the ';'
    std::string raw;      // the line as read
};

struct InpSection {
    std::string tag;  // upper-case, without brackets
    std::size_t line = 0;
    std::vector<InpRecord> records;
};

/// Lexical view of an INP file. Sections the model does not understand are
/// kept verbatim so tools can inspect them.
struct InpDocument {
    std::vector<InpSection> sections;

    /// Sections with the given tag, in file order (a tag may repeat).
    std::vector<const InpSection*> find(std::string_view tag) const;
};

InpDocument parse_inp_document(std::string_view text);

/// Builds a validated, solvable model from INP text.
HydraulicModel parse_inp(std::string_view text);
HydraulicModel model_from_document(const InpDocument& document);

/// Serializes `model`; sections are always written in the order TITLE,
/// JUNCTIONS, RESERVOIRS, PIPES, DEMANDS, PATTERNS, COORDINATES, TIMES, OPTIONS.
std::string write_inp(const HydraulicModel& model);

HydraulicModel load_inp(const std::string& path);
void save_inp(const std::string& path, const HydraulicModel& model);

}  // namespace leakloc
