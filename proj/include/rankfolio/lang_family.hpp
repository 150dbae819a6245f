#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace rankfolio {

// Language -> language-family mapping.  A built-in table covers the 116
// languages shipped in data/language_families.csv; anything unmapped falls
// back to "Other".
class FamilyMap {
public:
    static const FamilyMap& builtin();

    // CSV with a "language,family" header.  Throws ParseError on bad rows.
    static FamilyMap load_csv(std::istream& in);

    const std::string& family(const std::string& language) const;

    const std::map<std::string, std::string>& entries() const { return map_; }

private:
    std::map<std::string, std::string> map_;
};

// Shortcut through the built-in table.
const std::string& language_family(const std::string& language);

}  // namespace rankfolio
