#include "rankfolio/lang_family.hpp"

#include <istream>
#include <sstream>

#include "rankfolio/common.hpp"

namespace rankfolio {

namespace {

// Mirrors data/language_families.csv; a test asserts the two stay in sync.
const std::pair<const char*, const char*> kTable[] = {
    {"English", "Germanic"},
    {"German", "Germanic"},
    {"Dutch", "Germanic"},
    {"Swedish", "Germanic"},
    {"Norwegian", "Germanic"},
    {"Norwegian Nynorsk", "Germanic"},
    {"Danish", "Germanic"},
    {"Icelandic", "Germanic"},
    {"Afrikaans", "Germanic"},
    {"Luxembourgish", "Germanic"},
    {"Scots", "Germanic"},
    {"Western Frisian", "Germanic"},
    {"Arabic", "Afro-Asiatic"},
    {"Hausa", "Afro-Asiatic"},
    {"Somali", "Afro-Asiatic"},
    {"Maltese", "Afro-Asiatic"},
    {"Oromo", "Afro-Asiatic"},
    {"Afar", "Afro-Asiatic"},
    {"French", "Romance"},
    {"Spanish", "Romance"},
    {"Portuguese", "Romance"},
    {"Italian", "Romance"},
    {"Catalan", "Romance"},
    {"Romansh", "Romance"},
    {"Occitan", "Romance"},
    {"Galician", "Romance"},
    {"Corsican", "Romance"},
    {"Romanian", "Romance"},
    {"Haitian", "Romance"},
    {"Seselwa Creole French", "Romance"},
    {"Latin", "Romance"},
    {"Swahili", "Niger-Congo"},
    {"Zulu", "Niger-Congo"},
    {"Xhosa", "Niger-Congo"},
    {"Lingala", "Niger-Congo"},
    {"Wolof", "Niger-Congo"},
    {"Kinyarwanda", "Niger-Congo"},
    {"Ganda", "Niger-Congo"},
    {"Akan", "Niger-Congo"},
    {"Southern Sotho", "Niger-Congo"},
    {"Shona", "Niger-Congo"},
    {"Rundi", "Niger-Congo"},
    {"Sango", "Niger-Congo"},
    {"Polish", "Slavic"},
    {"Russian", "Slavic"},
    {"Ukrainian", "Slavic"},
    {"Czech", "Slavic"},
    {"Slovak", "Slavic"},
    {"Croatian", "Slavic"},
    {"Bosnian", "Slavic"},
    {"Serbian", "Slavic"},
    {"Bulgarian", "Slavic"},
    {"Belarusian", "Slavic"},
    {"Macedonian", "Slavic"},
    {"Slovenian", "Slavic"},
    {"Malay", "Austronesian"},
    {"Tagalog", "Austronesian"},
    {"Cebuano", "Austronesian"},
    {"Malagasy", "Austronesian"},
    {"Waray", "Austronesian"},
    {"Tonga", "Austronesian"},
    {"Nauru", "Austronesian"},
    {"Indonesian", "Austronesian"},
    {"Hindi", "Indo-Iranian"},
    {"Urdu", "Indo-Iranian"},
    {"Persian", "Indo-Iranian"},
    {"Marathi", "Indo-Iranian"},
    {"Gujarati", "Indo-Iranian"},
    {"Bengali", "Indo-Iranian"},
    {"Assamese", "Indo-Iranian"},
    {"Sanskrit", "Indo-Iranian"},
    {"Nepali", "Indo-Iranian"},
    {"Sindhi", "Indo-Iranian"},
    {"Kurdish", "Indo-Iranian"},
    {"Tajik", "Indo-Iranian"},
    {"Sinhala", "Indo-Iranian"},
    {"Tamil", "Dravidian"},
    {"Malayalam", "Dravidian"},
    {"Kannada", "Dravidian"},
    {"Chinese", "Sino-Tibetan"},
    {"Tibetan", "Sino-Tibetan"},
    {"Burmese", "Sino-Tibetan"},
    {"Vietnamese", "Austroasiatic"},
    {"Khmer", "Austroasiatic"},
    {"Khasi", "Austroasiatic"},
    {"Turkish", "Turkic"},
    {"Uzbek", "Turkic"},
    {"Azerbaijani", "Turkic"},
    {"Kazakh", "Turkic"},
    {"Kirghiz", "Turkic"},
    {"Tatar", "Turkic"},
    {"Uighur", "Turkic"},
    {"Modern Greek", "Hellenic"},
    {"Finnish", "Uralic"},
    {"Estonian", "Uralic"},
    {"Hungarian", "Uralic"},
    {"Latvian", "Baltic"},
    {"Lithuanian", "Baltic"},
    {"Irish", "Celtic"},
    {"Welsh", "Celtic"},
    {"Manx", "Celtic"},
    {"Georgian", "Kartvelian"},
    {"Korean", "Koreanic"},
    {"Albanian", "Albanian"},
    {"Japanese", "Japonic"},
    {"Armenian", "Armenian"},
    {"Thai", "Tai-Kadai"},
    {"Kalaallisut", "Eskimo-Aleut"},
    {"Basque", "Isolate"},
    {"Quechua", "Amerind"},
    {"Guarani", "Amerind"},
    {"Esperanto", "Constructed"},
    {"Interlingue", "Constructed"},
    {"Interlingua", "Constructed"},
    {"Klingon", "Constructed"},
    {"Volapük", "Constructed"},
};

const std::string kOther = "Other";

}  // namespace

const FamilyMap& FamilyMap::builtin() {
    static const FamilyMap instance = [] {
        FamilyMap m;
        for (const auto& [lang, fam] : kTable) {
            m.map_.emplace(lang, fam);
        }
        return m;
    }();
    return instance;
}

FamilyMap FamilyMap::load_csv(std::istream& in) {
    FamilyMap m;
    std::string line;
    std::int64_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) {
            throw ParseError("family map row needs 'language,family'", lineno);
        }
        std::string lang = line.substr(0, comma);
        std::string fam = line.substr(comma + 1);
        if (lineno == 1 && lang == "language" && fam == "family") {
            saw_header = true;
            continue;
        }
        if (lang.empty() || fam.empty()) {
            throw ParseError("empty language or family", lineno);
        }
        m.map_[lang] = fam;
    }
    if (!saw_header && m.map_.empty()) {
        throw ValidationError("family map CSV is empty");
    }
    return m;
}

const std::string& FamilyMap::family(const std::string& language) const {
    auto it = map_.find(language);
    return it == map_.end() ? kOther : it->second;
}

const std::string& language_family(const std::string& language) {
    return FamilyMap::builtin().family(language);
}

}  // namespace rankfolio
