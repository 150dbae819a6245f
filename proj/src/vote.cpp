#include "rankfolio/vote.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rankfolio/common.hpp"

#include "json.hpp"

namespace rankfolio {

namespace {

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::AWins: return "model_a";
        case Outcome::BWins: return "model_b";
        case Outcome::Tie: return "tie";
        case Outcome::BothBad: return "both_bad";
    }
    return "tie";
}

Outcome outcome_from_name(const std::string& s, std::int64_t lineno) {
    if (s == "model_a") return Outcome::AWins;
    if (s == "model_b") return Outcome::BWins;
    if (s == "tie") return Outcome::Tie;
    if (s == "both_bad") return Outcome::BothBad;
    throw ValidationError("winner must be one of model_a|model_b|tie|both_bad, got '" + s +
                          "' (line " + std::to_string(lineno) + ")");
}

// Task tags arrive comma- or semicolon-separated in flat files.  Order is
// preserved so parse inverts serialize exactly; stratification treats the
// list as a set.
std::vector<std::string> split_tasks(const std::string& field) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        const auto b = cur.find_first_not_of(" \t");
        if (b != std::string::npos) {
            const auto e = cur.find_last_not_of(" \t");
            out.push_back(cur.substr(b, e - b + 1));
        }
        cur.clear();
    };
    for (char c : field) {
        if (c == ',' || c == ';') flush(); else cur.push_back(c);
    }
    flush();
    return out;
}

// RFC-4180-ish field splitter: double quotes protect separators, "" escapes.
std::vector<std::string> split_csv_row(const std::string& line, std::int64_t lineno) {
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
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", lineno);
    fields.push_back(cur);
    return fields;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::int64_t parse_int(const std::string& s, const char* what, std::int64_t lineno) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string(what) + " is not an integer: '" + s + "'", lineno);
    }
}

constexpr const char* kCsvHeader = "model_a,model_b,winner,language,tasks,timestamp";

VoteSet parse_jsonl(std::istream& in) {
    VoteSet vs;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad JSON: ") + e.what(), lineno);
        }
        for (const char* key : {"model_a", "model_b", "winner", "language", "tasks", "timestamp"}) {
            if (!j.contains(key)) {
                throw ParseError(std::string("missing key '") + key + "'", lineno);
            }
        }
        Vote v;
        v.id = static_cast<std::int64_t>(vs.votes.size());
        try {
            v.model_a = j.at("model_a").get<std::string>();
            v.model_b = j.at("model_b").get<std::string>();
            v.language = j.at("language").get<std::string>();
            if (j.at("tasks").is_array()) {
                v.tasks = j.at("tasks").get<std::vector<std::string>>();
            } else {
                v.tasks = split_tasks(j.at("tasks").get<std::string>());
            }
            v.timestamp = j.at("timestamp").get<std::int64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad field type: ") + e.what(), lineno);
        }
        if (v.model_a == v.model_b) {
            throw ValidationError("model_a and model_b must differ, got '" + v.model_a +
                                  "' twice (line " + std::to_string(lineno) + ")");
        }
        v.outcome = outcome_from_name(j.at("winner").get<std::string>(), lineno);
        vs.models.insert(v.model_a);
        vs.models.insert(v.model_b);
        vs.votes.push_back(std::move(v));
    }
    return vs;
}

VoteSet parse_csv(std::istream& in) {
    VoteSet vs;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == kCsvHeader) continue;
        const auto fields = split_csv_row(line, lineno);
        if (fields.size() != 6) {
            throw ParseError("expected 6 columns (model_a,model_b,winner,language,tasks,timestamp), got " +
                                 std::to_string(fields.size()),
                             lineno);
        }
        Vote v;
        v.id = static_cast<std::int64_t>(vs.votes.size());
        v.model_a = fields[0];
        v.model_b = fields[1];
        if (v.model_a == v.model_b) {
            throw ValidationError("model_a and model_b must differ, got '" + v.model_a +
                                  "' twice (line " + std::to_string(lineno) + ")");
        }
        v.outcome = outcome_from_name(fields[2], lineno);
        v.language = fields[3];
        v.tasks = split_tasks(fields[4]);
        v.timestamp = parse_int(fields[5], "timestamp", lineno);
        vs.models.insert(v.model_a);
        vs.models.insert(v.model_b);
        vs.votes.push_back(std::move(v));
    }
    return vs;
}

}  // namespace

VoteSet parse_votes(std::istream& in, VoteFormat format) {
    if (!in) throw IoError("vote stream is not readable");
    return format == VoteFormat::JsonLines ? parse_jsonl(in) : parse_csv(in);
}

VoteSet parse_votes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open votes file: " + path);
    const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    return parse_votes(in, csv ? VoteFormat::Csv : VoteFormat::JsonLines);
}

void serialize_votes(const VoteSet& vs, VoteFormat format, std::ostream& out) {
    if (format == VoteFormat::Csv) {
        out << kCsvHeader << "\n";
        for (const Vote& v : vs.votes) {
            std::string tasks;
            for (std::size_t i = 0; i < v.tasks.size(); ++i) {
                if (i) tasks += ";";
                tasks += v.tasks[i];
            }
            out << csv_escape(v.model_a) << ',' << csv_escape(v.model_b) << ','
                << outcome_name(v.outcome) << ',' << csv_escape(v.language) << ','
                << csv_escape(tasks) << ',' << v.timestamp << "\n";
        }
        return;
    }
    for (const Vote& v : vs.votes) {
        nlohmann::ordered_json j;
        j["model_a"] = v.model_a;
        j["model_b"] = v.model_b;
        j["winner"] = outcome_name(v.outcome);
        j["language"] = v.language;
        j["tasks"] = v.tasks;
        j["timestamp"] = v.timestamp;
        out << j.dump() << "\n";
    }
}

const char* dimension_name(Dimension d) {
    switch (d) {
        case Dimension::Global: return "global";
        case Dimension::Language: return "language";
        case Dimension::Family: return "family";
        case Dimension::Task: return "task";
        case Dimension::FamilyXTask: return "family_x_task";
        case Dimension::LanguageXTask: return "language_x_task";
        case Dimension::Custom: return "custom";
    }
    return "global";
}

Dimension dimension_from_name(const std::string& name) {
    for (Dimension d : {Dimension::Global, Dimension::Language, Dimension::Family, Dimension::Task,
                        Dimension::FamilyXTask, Dimension::LanguageXTask, Dimension::Custom}) {
        if (name == dimension_name(d)) return d;
    }
    throw ValidationError("unknown stratification dimension: '" + name + "'");
}

std::string StratumKey::display() const {
    std::string s = dimension_name(dim);
    if (!values.empty()) {
        s += ":";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) s += "|";
            s += values[i];
        }
    }
    return s;
}

std::string StratumKey::file_slug() const {
    std::string s = dimension_name(dim);
    for (const std::string& v : values) {
        s += "__";
        for (char c : v) {
            s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
        }
    }
    return s;
}

bool StratumKey::operator<(const StratumKey& o) const {
    if (dim != o.dim) return static_cast<int>(dim) < static_cast<int>(o.dim);
    return values < o.values;
}

namespace {

std::vector<Stratum> group_votes(const VoteSet& vs, Dimension dim, int min_votes,
                                 const std::function<std::vector<std::vector<std::string>>(const Vote&)>& keys_of) {
    std::map<std::vector<std::string>, std::vector<std::int64_t>> groups;
    for (const Vote& v : vs.votes) {
        if (v.excluded()) continue;
        for (auto& key : keys_of(v)) {
            auto& ids = groups[std::move(key)];
            // task lists are multi-sets; a vote joins each stratum once
            if (ids.empty() || ids.back() != v.id) ids.push_back(v.id);
        }
    }
    std::vector<Stratum> out;
    for (auto& [values, ids] : groups) {
        if (static_cast<int>(ids.size()) < min_votes) continue;
        out.push_back(Stratum{StratumKey{dim, values}, std::move(ids)});
    }
    return out;
}

}  // namespace

std::vector<Stratum> stratify(const VoteSet& vs, Dimension dim, int min_votes,
                              const FamilyMap* families) {
    if (min_votes < 1) throw ValidationError("min_votes must be >= 1");
    const FamilyMap& fam = families ? *families : FamilyMap::builtin();
    switch (dim) {
        case Dimension::Global:
            return group_votes(vs, dim, min_votes, [](const Vote&) {
                return std::vector<std::vector<std::string>>{{}};
            });
        case Dimension::Language:
            return group_votes(vs, dim, min_votes, [](const Vote& v) {
                return std::vector<std::vector<std::string>>{{v.language}};
            });
        case Dimension::Family:
            return group_votes(vs, dim, min_votes, [&fam](const Vote& v) {
                return std::vector<std::vector<std::string>>{{fam.family(v.language)}};
            });
        case Dimension::Task:
            return group_votes(vs, dim, min_votes, [](const Vote& v) {
                std::vector<std::vector<std::string>> keys;
                for (const std::string& t : v.tasks) keys.push_back({t});
                return keys;
            });
        case Dimension::FamilyXTask:
            return group_votes(vs, dim, min_votes, [&fam](const Vote& v) {
                std::vector<std::vector<std::string>> keys;
                for (const std::string& t : v.tasks) keys.push_back({fam.family(v.language), t});
                return keys;
            });
        case Dimension::LanguageXTask:
            return group_votes(vs, dim, min_votes, [](const Vote& v) {
                std::vector<std::vector<std::string>> keys;
                for (const std::string& t : v.tasks) keys.push_back({v.language, t});
                return keys;
            });
        case Dimension::Custom:
            throw ValidationError("custom stratification requires stratify_custom with a key function");
    }
    return {};
}

std::vector<Stratum> stratify_custom(const VoteSet& vs, const std::string& column_name,
                                     const std::function<std::string(const Vote&)>& key_fn,
                                     int min_votes) {
    if (min_votes < 1) throw ValidationError("min_votes must be >= 1");
    return group_votes(vs, Dimension::Custom, min_votes, [&](const Vote& v) {
        return std::vector<std::vector<std::string>>{{column_name, key_fn(v)}};
    });
}

std::vector<Vote> decisive_slice(const VoteSet& vs) {
    std::vector<Vote> out;
    for (const Vote& v : vs.votes) {
        if (v.decisive()) out.push_back(v);
    }
    return out;
}

std::vector<Vote> slice_by_ids(const VoteSet& vs, const std::vector<std::int64_t>& ids) {
    std::vector<Vote> out;
    out.reserve(ids.size());
    for (std::int64_t id : ids) {
        if (id < 0 || id >= static_cast<std::int64_t>(vs.votes.size())) {
            throw ValidationError("vote id out of range: " + std::to_string(id));
        }
        out.push_back(vs.votes[static_cast<std::size_t>(id)]);
    }
    return out;
}

}  // namespace rankfolio
