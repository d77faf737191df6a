#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "glad/cohort.hpp"
#include "glad/errors.hpp"
#include "glad/text.hpp"

namespace glad {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out.empty() ? "none" : out;
}

}  // namespace

HeaderMismatch::HeaderMismatch(std::vector<std::string> missing, std::vector<std::string> extra)
    : InputError("CSV header mismatch; missing: " + join(missing) + "; extra: " + join(extra)),
      missing_(std::move(missing)),
      extra_(std::move(extra)) {}

std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r' || i + 1 != line.size()) {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

namespace {

std::vector<std::string> expected_columns(const DataDictionary& dict, bool with_outcome) {
    auto cols = dict.predictor_ids();
    cols.emplace_back(kColJoint);
    cols.emplace_back(kColStartDate);
    cols.emplace_back(kColFollowup);
    if (with_outcome) cols.push_back(dict.outcome().id);
    return cols;
}

}  // namespace

Value parse_cell(const VariableSpec& spec, const std::string& cell) {
    if (spec.is_continuous()) {
        if (auto v = parse_number(cell)) return *v;
    } else if (spec.is_binary()) {
        if (auto b = parse_binary(cell)) return *b;
    } else if (auto level = level_index(std::get<Categorical>(spec.kind), Value{cell})) {
        return std::get<Categorical>(spec.kind).levels[*level];
    }
    return cell;
}

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::vector<PatientRecord> read_csv(const DataDictionary& dict, std::istream& in,
                                    const CsvOptions& options) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("CSV input is empty (no header)");
    const auto header = split_csv_line(line);

    const auto required = expected_columns(dict, options.require_outcome);
    std::set<std::string> allowed(required.begin(), required.end());
    allowed.insert(dict.outcome().id);
    std::set<std::string> present(header.begin(), header.end());
    std::vector<std::string> missing, extra;
    for (const auto& c : required)
        if (!present.count(c)) missing.push_back(c);
    for (const auto& c : header)
        if (!allowed.count(c)) extra.push_back(c);
    if (present.size() != header.size()) extra.push_back("(duplicate column)");
    if (!missing.empty() || !extra.empty()) throw HeaderMismatch(missing, extra);

    // Column index -> variable spec (nullptr for admin columns).
    std::vector<const VariableSpec*> specs(header.size(), nullptr);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == dict.outcome().id) specs[c] = &dict.outcome();
        else specs[c] = dict.find(header[c]);
    }

    std::vector<PatientRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row;
        auto cells = split_csv_line(line);
        if (cells.size() > header.size())
            throw IoError("CSV row " + std::to_string(row) + " has more fields than the header");
        cells.resize(header.size());

        PatientRecord rec;
        rec.record_id = "row-" + std::to_string(row);
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto& name = header[c];
            const auto& cell = cells[c];
            if (specs[c] != nullptr) {
                if (!blank(cell)) rec.values.emplace(name, parse_cell(*specs[c], cell));
            } else if (name == kColJoint) {
                rec.admin.primary_joint = parse_joint(cell);
            } else if (name == kColStartDate) {
                rec.admin.start_date = parse_iso_date(cell);
            } else if (name == kColFollowup) {
                rec.admin.followup_complete = parse_binary(cell);
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PatientRecord> load_csv(const DataDictionary& dict, const std::filesystem::path& path,
                                    const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(dict, in, options);
}

void write_csv(const DataDictionary& dict, std::span<const PatientRecord> records, std::ostream& out) {
    const auto cols = expected_columns(dict, true);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    auto cell = [](const Value* v) -> std::string {
        if (v == nullptr) return {};
        if (const auto* d = std::get_if<double>(v)) return format_double(*d);
        if (const auto* b = std::get_if<bool>(v)) return *b ? "1" : "0";
        return csv_field(std::get<std::string>(*v));
    };
    for (const auto& rec : records) {
        for (const auto& spec : dict.predictors()) {
            auto it = rec.values.find(spec.id);
            out << cell(it == rec.values.end() ? nullptr : &it->second) << ',';
        }
        out << to_string(rec.admin.primary_joint) << ','
            << (rec.admin.start_date ? rec.admin.start_date->iso() : std::string{}) << ','
            << (rec.admin.followup_complete ? (*rec.admin.followup_complete ? "1" : "0") : "") << ',';
        auto it = rec.values.find(dict.outcome().id);
        out << cell(it == rec.values.end() ? nullptr : &it->second) << '\n';
    }
}

void save_csv(const DataDictionary& dict, std::span<const PatientRecord> records,
              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(dict, records, out);
    if (!out) throw IoError("write failed for " + path.string());
}

std::optional<Edition> detect_edition(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    const auto header = split_csv_line(line);
    const std::set<std::string> present(header.begin(), header.end());
    for (Edition e : {Edition::base34, Edition::extended46}) {
        const auto& dict = builtin_dictionary(e);
        auto want = expected_columns(dict, false);
        std::set<std::string> expected(want.begin(), want.end());
        auto with_outcome = expected;
        with_outcome.insert(dict.outcome().id);
        if (present == expected || present == with_outcome) return e;
    }
    return std::nullopt;
}

}  // namespace glad
