#include "leakloc/inp.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "leakloc/error.hpp"
#include "leakloc/text.hpp"

namespace leakloc {

namespace {

// Sections whose content changes the hydraulics in ways this model cannot
// represent. Non-empty content is rejected.
const std::set<std::string> kUnsupported = {"PUMPS", "VALVES", "TANKS", "EMITTERS", "CONTROLS", "RULES"};

// Demand units accepted in [OPTIONS] and their factor to m3/h.
const std::map<std::string, double> kFlowUnits = {
    {"CMH", 1.0}, {"LPS", 3.6}, {"LPM", 0.06}, {"MLD", 1000.0 / 24.0}, {"CMD", 1.0 / 24.0},
};

double parse_clock(const std::vector<std::string>& tokens, std::size_t first, std::size_t line) {
    if (first >= tokens.size()) throw ParseError("missing time value", line);
    const std::string& value = tokens[first];
    if (value.find(':') != std::string::npos) {
        auto parts = split(value, ':');
        if (parts.size() > 3) throw ParseError("malformed time '" + value + "'", line);
        double seconds = 0.0;
        const double scale[] = {3600.0, 60.0, 1.0};
        for (std::size_t i = 0; i < parts.size(); ++i) seconds += parse_double(parts[i], line, "time") * scale[i];
        return seconds;
    }
    double amount = parse_double(value, line, "time");
    std::string unit = first + 1 < tokens.size() ? to_upper(tokens[first + 1]) : "HOURS";
    if (unit.starts_with("SEC")) return amount;
    if (unit.starts_with("MIN")) return amount * 60.0;
    if (unit.starts_with("HOUR")) return amount * 3600.0;
    if (unit.starts_with("DAY")) return amount * 86400.0;
    throw ParseError("unknown time unit '" + tokens[first + 1] + "'", line);
}

std::string format_clock(double seconds) {
    if (seconds != std::floor(seconds) || seconds < 0) return format_double(seconds) + " SEC";
    auto total = static_cast<long long>(seconds);
    std::ostringstream out;
    out << total / 3600 << ':';
    const long long minutes = (total % 3600) / 60;
    const long long secs = total % 60;
    out << (minutes < 10 ? "0" : "") << minutes << ':' << (secs < 10 ? "0" : "") << secs;
    return out.str();
}

void require_tokens(const InpRecord& record, std::size_t count, std::string_view section) {
    if (record.tokens.size() < count)
        throw ParseError("too few fields in [" + std::string(section) + "] record", record.line);
}

PipeStatus parse_status(const std::string& token, const std::string& pipe, std::size_t line) {
    const std::string upper = to_upper(token);
    if (upper == "OPEN") return PipeStatus::open;
    if (upper == "CLOSED") return PipeStatus::closed;
    if (upper == "CV") throw UnsupportedFeature("check valve on pipe '" + pipe + "'");
    throw ParseError("unknown pipe status '" + token + "' on pipe '" + pipe + "'", line);
}

}  // namespace

std::vector<const InpSection*> InpDocument::find(std::string_view tag) const {
    std::vector<const InpSection*> out;
    for (const auto& s : sections)
        if (s.tag == tag) out.push_back(&s);
    return out;
}

InpDocument parse_inp_document(std::string_view text) {
    InpDocument doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;

        std::string_view body = line;
        std::string comment;
        if (auto semi = body.find(';'); semi != std::string_view::npos) {
            comment = std::string(trim(body.substr(semi + 1)));
            body = body.substr(0, semi);
        }
        body = trim(body);
        if (body.empty()) continue;

        if (body.front() == '[') {
            auto close = body.find(']');
            if (close == std::string_view::npos) throw ParseError("unterminated section header", line_no);
            doc.sections.push_back(InpSection{to_upper(trim(body.substr(1, close - 1))), line_no, {}});
            continue;
        }
        if (doc.sections.empty()) throw ParseError("record outside of any section", line_no);
        doc.sections.back().records.push_back(
            InpRecord{line_no, split_whitespace(body), std::move(comment), std::string(line)});
    }
    return doc;
}

HydraulicModel model_from_document(const InpDocument& doc) {
    for (const auto& section : doc.sections)
        if (kUnsupported.contains(section.tag) && !section.records.empty())
            throw UnsupportedFeature("[" + section.tag + "] section with " + std::to_string(section.records.size()) +
                                     " record(s) at line " + std::to_string(section.line));

    // Options first: flow units scale every demand read below.
    double flow_factor = 1.0;
    std::string default_pattern;
    for (const auto* section : doc.find("OPTIONS")) {
        for (const auto& r : section->records) {
            const std::string key = to_upper(r.tokens[0]);
            if (key == "UNITS") {
                require_tokens(r, 2, "OPTIONS");
                auto it = kFlowUnits.find(to_upper(r.tokens[1]));
                if (it == kFlowUnits.end()) throw UnsupportedFeature("flow units '" + r.tokens[1] + "'");
                flow_factor = it->second;
            } else if (key == "HEADLOSS") {
                require_tokens(r, 2, "OPTIONS");
                if (to_upper(r.tokens[1]) != "H-W")
                    throw UnsupportedFeature("headloss formula '" + r.tokens[1] + "' (only H-W is supported)");
            } else if (key == "PATTERN") {
                require_tokens(r, 2, "OPTIONS");
                default_pattern = r.tokens[1];
            }
        }
    }

    ModelBuilder builder;
    std::string title;
    for (const auto* section : doc.find("TITLE"))
        for (const auto& r : section->records) {
            if (!title.empty()) title += '\n';
            title += std::string(trim(r.raw));
        }
    builder.title(title);

    for (const auto* section : doc.find("JUNCTIONS"))
        for (const auto& r : section->records) {
            require_tokens(r, 2, "JUNCTIONS");
            const double elevation = parse_double(r.tokens[1], r.line, "elevation");
            const double demand = r.tokens.size() > 2 ? parse_double(r.tokens[2], r.line, "demand") : 0.0;
            std::string pattern = r.tokens.size() > 3 ? r.tokens[3] : std::string{};
            builder.add_junction(r.tokens[0], elevation, demand * flow_factor, std::move(pattern));
        }

    for (const auto* section : doc.find("RESERVOIRS"))
        for (const auto& r : section->records) {
            require_tokens(r, 2, "RESERVOIRS");
            builder.add_reservoir(r.tokens[0], parse_double(r.tokens[1], r.line, "head"),
                                  r.tokens.size() > 2 ? r.tokens[2] : std::string{});
        }

    for (const auto* section : doc.find("PIPES"))
        for (const auto& r : section->records) {
            require_tokens(r, 6, "PIPES");
            const double length = parse_double(r.tokens[3], r.line, "length");
            const double diameter = parse_double(r.tokens[4], r.line, "diameter");
            const double roughness = parse_double(r.tokens[5], r.line, "roughness");
            PipeStatus status = PipeStatus::open;
            if (r.tokens.size() > 6) {
                const double minor = parse_double(r.tokens[6], r.line, "minor loss");
                if (minor != 0.0) throw UnsupportedFeature("minor loss on pipe '" + r.tokens[0] + "'");
            }
            if (r.tokens.size() > 7) status = parse_status(r.tokens[7], r.tokens[0], r.line);
            builder.add_pipe(r.tokens[0], r.tokens[1], r.tokens[2], length, diameter, roughness, status);
        }

    for (const auto* section : doc.find("STATUS"))
        for (const auto& r : section->records) {
            require_tokens(r, 2, "STATUS");
            if (!builder.set_pipe_status(r.tokens[0], parse_status(r.tokens[1], r.tokens[0], r.line)))
                throw ParseError("[STATUS] names unknown pipe '" + r.tokens[0] + "'", r.line);
        }

    for (const auto* section : doc.find("PATTERNS"))
        for (const auto& r : section->records) {
            require_tokens(r, 2, "PATTERNS");
            std::vector<double> multipliers;
            for (std::size_t i = 1; i < r.tokens.size(); ++i)
                multipliers.push_back(parse_double(r.tokens[i], r.line, "pattern multiplier"));
            builder.add_pattern(r.tokens[0], std::move(multipliers));
        }

    // [DEMANDS] replaces the [JUNCTIONS] demand of every junction it lists.
    std::set<std::string> overridden;
    for (const auto* section : doc.find("DEMANDS"))
        for (const auto& r : section->records) {
            require_tokens(r, 2, "DEMANDS");
            Junction* j = builder.find_junction(r.tokens[0]);
            if (!j) throw ParseError("[DEMANDS] names unknown junction '" + r.tokens[0] + "'", r.line);
            const double demand = parse_double(r.tokens[1], r.line, "demand") * flow_factor;
            std::string pattern = r.tokens.size() > 2 ? r.tokens[2] : std::string{};
            if (overridden.insert(j->label).second) {
                j->base_demand = demand;
                j->pattern = std::move(pattern);
            } else if (j->pattern == pattern) {
                j->base_demand += demand;
            } else {
                throw UnsupportedFeature("junction '" + j->label + "' has demand categories with different patterns");
            }
        }

    if (!default_pattern.empty()) {
        if (!builder.has_pattern(default_pattern))
            throw ParseError("default pattern '" + default_pattern + "' is not defined", 0);
        for (const auto* section : doc.find("JUNCTIONS"))
            for (const auto& r : section->records)
                if (Junction* j = builder.find_junction(r.tokens[0]); j && j->pattern.empty())
                    j->pattern = default_pattern;
    }

    for (const auto* section : doc.find("COORDINATES"))
        for (const auto& r : section->records) {
            require_tokens(r, 3, "COORDINATES");
            builder.coordinate(r.tokens[0], parse_double(r.tokens[1], r.line, "x coordinate"),
                               parse_double(r.tokens[2], r.line, "y coordinate"));
        }

    double duration = 24.0 * 3600.0;
    double step = 3600.0;
    std::optional<double> pattern_step;
    for (const auto* section : doc.find("TIMES"))
        for (const auto& r : section->records) {
            const std::string key = to_upper(r.tokens[0]);
            const std::string second = r.tokens.size() > 1 ? to_upper(r.tokens[1]) : std::string{};
            if (key == "DURATION") {
                duration = parse_clock(r.tokens, 1, r.line);
            } else if (key == "HYDRAULIC" && second == "TIMESTEP") {
                step = parse_clock(r.tokens, 2, r.line);
            } else if (key == "PATTERN" && second == "TIMESTEP") {
                pattern_step = parse_clock(r.tokens, 2, r.line);
            }
        }
    if (!(step > 0.0)) throw ParseError("hydraulic timestep must be positive", 0);
    if (duration < 0.0) throw ParseError("duration must be non-negative", 0);
    TimeConfig times;
    times.step_seconds = step;
    times.pattern_step_seconds = pattern_step.value_or(step);
    times.steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(duration / step + 1e-9)));
    builder.times(times);

    HydraulicModel model = builder.build();
    model.require_solvable();
    return model;
}

HydraulicModel parse_inp(std::string_view text) { return model_from_document(parse_inp_document(text)); }

std::string write_inp(const HydraulicModel& model) {
    std::ostringstream out;
    auto num = [](double v) { return format_double(v); };

    out << "[TITLE]\n";
    if (!model.title().empty()) out << model.title() << '\n';

    out << "\n[JUNCTIONS]\n;ID\tElev\tDemand\tPattern\n";
    for (const auto& j : model.junctions()) {
        out << j.label << '\t' << num(j.elevation) << '\t' << num(j.base_demand);
        if (!j.pattern.empty()) out << '\t' << j.pattern;
        out << '\n';
    }

    out << "\n[RESERVOIRS]\n;ID\tHead\tPattern\n";
    for (const auto& r : model.reservoirs()) {
        out << r.label << '\t' << num(r.head);
        if (!r.head_pattern.empty()) out << '\t' << r.head_pattern;
        out << '\n';
    }

    out << "\n[PIPES]\n;ID\tNode1\tNode2\tLength\tDiameter\tRoughness\tMinorLoss\tStatus\n";
    for (const auto& p : model.pipes())
        out << p.label << '\t' << model.label(p.from) << '\t' << model.label(p.to) << '\t' << num(p.length) << '\t'
            << num(p.diameter_mm) << '\t' << num(p.roughness) << "\t0\t"
            << (p.status == PipeStatus::open ? "Open" : "Closed") << '\n';

    out << "\n[DEMANDS]\n";

    out << "\n[PATTERNS]\n";
    for (const auto& p : model.patterns()) {
        // Six multipliers per line, as EPANET writes them.
        for (std::size_t i = 0; i < p.multipliers.size(); i += 6) {
            out << p.label;
            for (std::size_t k = i; k < std::min(i + 6, p.multipliers.size()); ++k) out << '\t' << num(p.multipliers[k]);
            out << '\n';
        }
    }

    out << "\n[COORDINATES]\n";
    for (std::size_t i = 0; i < model.node_count(); ++i)
        if (auto xy = model.coordinate(NodeId{i}))
            out << model.label(NodeId{i}) << '\t' << num(xy->x) << '\t' << num(xy->y) << '\n';

    const auto& t = model.times();
    out << "\n[TIMES]\n";
    out << "Duration\t" << format_clock(static_cast<double>(t.steps) * t.step_seconds) << '\n';
    out << "Hydraulic Timestep\t" << format_clock(t.step_seconds) << '\n';
    out << "Pattern Timestep\t" << format_clock(t.pattern_step_seconds) << '\n';

    out << "\n[OPTIONS]\nUnits\tCMH\nHeadloss\tH-W\n";
    out << "\n[END]\n";
    return out.str();
}

HydraulicModel load_inp(const std::string& path) { return parse_inp(read_file(path)); }

void save_inp(const std::string& path, const HydraulicModel& model) { write_file(path, write_inp(model)); }

}  // namespace leakloc
