#include "rlfuzz/grammar.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rlfuzz::grammar {

namespace {

const char* const kWords[] = {
    "lorem", "ipsum", "dolor", "sit",  "amet", "consectetur", "adipiscing", "elit",
    "sed",   "do",    "eiusmod", "tempor", "incididunt", "labore", "dolore", "magna",
};
constexpr size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

// Rule-breaking text fragments: together with the plain words these cover
// every printable ASCII byte plus a handful of UTF-8 sequences, giving the
// reference grammar its 107-character alphabet.
const char* const kSpiceWords[] = {
    "!\"#$%&'()*+,-./",
    ":;<=>?@",
    "[\\]^_`",
    "{|}~",
    "ABCDEFGHIJKLM",
    "NOPQRSTUVWXYZ",
    "\xC3\xA9\xC3\xBC\xE2\x80\x94",
    "\xC2\xA9\xC2\xAB\xC2\xBB\xE2\x84\xA2",
};
constexpr size_t kSpiceWordCount = sizeof(kSpiceWords) / sizeof(kSpiceWords[0]);

const char* const kHosts[] = {"example.com", "test.invalid", "localhost", "fuzz.example.org"};
const char* const kSchemes[] = {"http", "https", "ftp"};

std::string random_word(Rng& rng) {
    if (rng.chance(0.03)) return kSpiceWords[rng.uniform(kSpiceWordCount)];
    return kWords[rng.uniform(kWordCount)];
}

std::string random_text(Rng& rng) {
    size_t n = 1 + rng.uniform(3);
    std::string s;
    for (size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += random_word(rng);
    }
    return s;
}

std::string random_token(Rng& rng, size_t lo, size_t hi) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    size_t n = lo + rng.uniform(hi - lo + 1);
    std::string s;
    s.reserve(n);
    for (size_t i = 0; i < n; ++i) s += alphabet[rng.uniform(36)];
    return s;
}

std::string attr_value(Rng& rng, const AttrSpec& attr, double error_rate) {
    bool inject = error_rate > 0.0 && rng.chance(error_rate);
    switch (attr.kind) {
        case AttrKind::FixedSet:
            if (attr.options.empty()) return "";
            return attr.options[rng.uniform(attr.options.size())];
        case AttrKind::IntegerRange: {
            if (inject) {
                // out-of-range: far above hi or far below lo
                long long v = rng.chance(0.5) ? attr.hi + 1 + (long long)rng.uniform(1u << 30)
                                              : attr.lo - 1 - (long long)rng.uniform(1u << 30);
                return std::to_string(v);
            }
            return std::to_string(rng.uniform_range(attr.lo, attr.hi));
        }
        case AttrKind::RandomString:
            if (inject) return random_token(rng, 600, 1200);
            return random_token(rng, 3, 12);
        case AttrKind::UrlLike: {
            if (inject) return std::string("javascript:") + random_token(rng, 600, 1200);
            std::string url = kSchemes[rng.uniform(3)];
            url += "://";
            url += kHosts[rng.uniform(4)];
            url += "/";
            url += random_token(rng, 2, 10);
            if (rng.chance(0.25)) url += "#" + random_token(rng, 2, 6);
            return url;
        }
    }
    return "";
}

}  // namespace

void validate(const TagSpec& spec) {
    if (spec.name.empty()) throw std::invalid_argument("tag spec: empty name");
    for (char c : spec.name)
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')))
            throw std::invalid_argument("tag spec '" + spec.name + "': name must be ASCII lowercase");
    for (size_t i = 0; i < spec.attributes.size(); ++i)
        for (size_t j = i + 1; j < spec.attributes.size(); ++j)
            if (spec.attributes[i].name == spec.attributes[j].name)
                throw std::invalid_argument("tag spec '" + spec.name + "': duplicate attribute '" +
                                            spec.attributes[i].name + "'");
}

void validate(const GrammarConfig& cfg) {
    if (cfg.tags.empty()) throw std::invalid_argument("grammar config: no tags");
    for (const auto& t : cfg.tags) validate(t);
    if (cfg.max_attrs_per_tag < 0) throw std::invalid_argument("grammar config: negative max_attrs_per_tag");
    if (cfg.error_rate < 0.0 || cfg.error_rate > 1.0)
        throw std::invalid_argument("grammar config: error_rate outside [0,1]");
}

std::string generate_tag(Rng& rng, const TagSpec& spec, double error_rate, size_t max_attrs) {
    std::string out = "<" + spec.name;

    size_t cap = std::min(max_attrs, spec.attributes.size());
    size_t n_attrs = cap == 0 ? 0 : rng.uniform(cap + 1);
    // pick a distinct subset, preserving the spec's attribute order
    std::vector<size_t> idx(spec.attributes.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t i = 0; i < n_attrs; ++i) {
        size_t j = i + rng.uniform(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<bool> chosen(spec.attributes.size(), false);
    for (size_t i = 0; i < n_attrs; ++i) chosen[idx[i]] = true;
    for (size_t i = 0; i < spec.attributes.size(); ++i) {
        if (!chosen[i]) continue;
        const AttrSpec& a = spec.attributes[i];
        out += " " + a.name + "=\"" + attr_value(rng, a, error_rate) + "\"";
    }
    out += ">";

    if (spec.content_model == ContentModel::Void) return out;
    if (spec.content_model == ContentModel::Text) out += random_text(rng);
    else if (rng.chance(0.5)) out += random_text(rng);
    out += "</" + spec.name + ">";
    return out;
}

TestCase build_test_case(const std::vector<std::string>& tags, const std::string& templ,
                         TestCaseSource source, const std::string& created_from) {
    size_t marker = templ.find(kInsertionMarker);
    if (marker == std::string::npos)
        throw std::invalid_argument("template has no insertion marker");
    if (templ.find(kInsertionMarker, marker + 1) != std::string::npos)
        throw std::invalid_argument("template has more than one insertion marker");

    std::string content = templ.substr(0, marker);
    for (const auto& t : tags) content += t;
    content += templ.substr(marker + 1);

    TestCase tc;
    tc.content = std::move(content);
    tc.source = source;
    tc.tag_count = tags.size();
    tc.created_from = created_from;
    return tc;
}

std::string CorpusManifest::to_text() const {
    std::ostringstream out;
    out << "seed = " << seed << "\n";
    out << "total = " << total << "\n";
    for (const auto& [name, count] : per_tag_counts) out << "count." << name << " = " << count << "\n";
    return out.str();
}

CorpusManifest CorpusManifest::from_text(const std::string& text) {
    CorpusManifest m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, line.find_last_not_of(" \t", eq - 1) + 1);
        std::string value = line.substr(line.find_first_not_of(" \t", eq + 1));
        if (key == "seed") m.seed = std::stoull(value);
        else if (key == "total") m.total = std::stoull(value);
        else if (key.rfind("count.", 0) == 0) m.per_tag_counts[key.substr(6)] = std::stoull(value);
    }
    return m;
}

CorpusManifest generate_corpus(const GrammarConfig& cfg, uint64_t n_tags, std::ostream& out) {
    validate(cfg);
    if (n_tags == 0) throw std::invalid_argument("generate_corpus: n_tags must be positive");

    Rng rng(cfg.rng_seed);
    CorpusManifest manifest;
    manifest.seed = cfg.rng_seed;
    manifest.total = n_tags;
    for (uint64_t i = 0; i < n_tags; ++i) {
        const TagSpec& spec = cfg.tags[rng.uniform(cfg.tags.size())];
        out << generate_tag(rng, spec, cfg.error_rate, size_t(cfg.max_attrs_per_tag)) << "\n";
        ++manifest.per_tag_counts[spec.name];
    }
    return manifest;
}

std::vector<std::string> tag_names(const GrammarConfig& cfg) {
    std::vector<std::string> names;
    names.reserve(cfg.tags.size());
    for (const auto& t : cfg.tags) names.push_back(t.name);
    return names;
}

GrammarConfig default_grammar(uint64_t seed) {
    auto fixed = [](std::string name, std::vector<std::string> opts) {
        AttrSpec a;
        a.name = std::move(name);
        a.kind = AttrKind::FixedSet;
        a.options = std::move(opts);
        return a;
    };
    auto num = [](std::string name, long long lo, long long hi) {
        AttrSpec a;
        a.name = std::move(name);
        a.kind = AttrKind::IntegerRange;
        a.lo = lo;
        a.hi = hi;
        return a;
    };
    auto str = [](std::string name) {
        AttrSpec a;
        a.name = std::move(name);
        a.kind = AttrKind::RandomString;
        return a;
    };
    auto url = [](std::string name) {
        AttrSpec a;
        a.name = std::move(name);
        a.kind = AttrKind::UrlLike;
        return a;
    };

    auto tag = [](std::string name, ContentModel m, std::vector<AttrSpec> attrs) {
        TagSpec t;
        t.name = std::move(name);
        t.content_model = m;
        t.attributes = std::move(attrs);
        return t;
    };

    const auto V = ContentModel::Void;
    const auto T = ContentModel::Text;
    const auto N = ContentModel::Nestable;

    GrammarConfig cfg;
    cfg.rng_seed = seed;
    cfg.tags = {
        tag("a", T, {url("href"), fixed("target", {"_blank", "_self", "_parent", "_top"}), str("title"), str("id")}),
        tag("abbr", T, {str("title")}),
        tag("address", T, {str("id")}),
        tag("area", V, {url("href"), fixed("shape", {"rect", "circle", "poly", "default"}), str("alt")}),
        tag("article", N, {str("id"), str("class")}),
        tag("aside", N, {str("id"), str("class")}),
        tag("audio", N, {url("src"), fixed("controls", {"controls"}), fixed("loop", {"loop"}), fixed("preload", {"none", "metadata", "auto"})}),
        tag("b", T, {str("class")}),
        tag("bdo", T, {fixed("dir", {"ltr", "rtl"})}),
        tag("blockquote", T, {url("cite")}),
        tag("br", V, {}),
        tag("button", T, {fixed("type", {"submit", "reset", "button"}), str("name"), str("value"), fixed("disabled", {"disabled"})}),
        tag("canvas", N, {num("width", 0, 4096), num("height", 0, 4096)}),
        tag("caption", T, {str("class")}),
        tag("cite", T, {}),
        tag("code", T, {str("class")}),
        tag("col", V, {num("span", 1, 1000)}),
        tag("colgroup", N, {num("span", 1, 1000)}),
        tag("dd", T, {}),
        tag("del", T, {url("cite"), str("datetime")}),
        tag("details", N, {fixed("open", {"open"})}),
        tag("dfn", T, {str("title")}),
        tag("div", N, {str("id"), str("class"), str("title"), fixed("dir", {"ltr", "rtl", "auto"})}),
        tag("dl", N, {str("class")}),
        tag("dt", T, {}),
        tag("em", T, {}),
        tag("embed", V, {url("src"), fixed("type", {"image/png", "video/mp4", "application/pdf"}), num("width", 0, 4096), num("height", 0, 4096)}),
        tag("fieldset", N, {fixed("disabled", {"disabled"}), str("name")}),
        tag("figcaption", T, {}),
        tag("figure", N, {str("class")}),
        tag("footer", N, {str("id")}),
        tag("form", N, {url("action"), fixed("method", {"get", "post", "dialog"}), str("name")}),
        tag("h1", T, {str("id")}),
        tag("h2", T, {str("id")}),
        tag("h3", T, {str("id")}),
        tag("h4", T, {str("id")}),
        tag("h5", T, {str("id")}),
        tag("h6", T, {str("id")}),
        tag("header", N, {str("class")}),
        tag("hr", V, {}),
        tag("i", T, {}),
        tag("iframe", N, {url("src"), str("name"), num("width", 0, 4096), num("height", 0, 4096)}),
        tag("img", V, {url("src"), str("alt"), num("width", 0, 4096), num("height", 0, 4096), fixed("loading", {"eager", "lazy"})}),
        tag("input", V, {fixed("type", {"text", "password", "checkbox", "radio", "submit", "number", "email", "date", "file", "color", "range", "hidden"}), str("name"), str("value"), num("maxlength", 0, 5000), num("size", 1, 100), fixed("checked", {"checked"}), fixed("disabled", {"disabled"})}),
        tag("ins", T, {url("cite"), str("datetime")}),
        tag("kbd", T, {}),
        tag("label", T, {str("for")}),
        tag("legend", T, {}),
        tag("li", T, {num("value", 0, 10000)}),
        tag("link", V, {url("href"), fixed("rel", {"stylesheet", "icon", "canonical", "preload"}), fixed("type", {"text/css", "image/png"})}),
        tag("main", N, {str("id")}),
        tag("map", N, {str("name")}),
        tag("mark", T, {}),
        tag("meter", T, {num("value", 0, 100), num("min", 0, 50), num("max", 50, 200), num("low", 0, 40), num("high", 60, 100)}),
        tag("nav", N, {str("class")}),
        tag("object", N, {url("data"), fixed("type", {"image/png", "video/mp4", "application/pdf"}), num("width", 0, 4096), num("height", 0, 4096)}),
        tag("ol", N, {num("start", -100, 100), fixed("reversed", {"reversed"}), fixed("type", {"1", "a", "A", "i", "I"})}),
        tag("optgroup", N, {str("label"), fixed("disabled", {"disabled"})}),
        tag("option", T, {str("value"), fixed("selected", {"selected"}), fixed("disabled", {"disabled"})}),
        tag("output", T, {str("for"), str("name")}),
        tag("p", T, {str("class"), str("id")}),
        tag("param", V, {str("name"), str("value")}),
        tag("picture", N, {}),
        tag("pre", T, {str("class")}),
        tag("progress", T, {num("value", 0, 100), num("max", 1, 200)}),
        tag("q", T, {url("cite")}),
        tag("rp", T, {}),
        tag("rt", T, {}),
        tag("ruby", N, {}),
        tag("s", T, {}),
        tag("samp", T, {}),
        tag("section", N, {str("id"), str("class")}),
        tag("select", N, {str("name"), num("size", 1, 50), fixed("multiple", {"multiple"}), fixed("disabled", {"disabled"})}),
        tag("small", T, {}),
        tag("source", V, {url("src"), fixed("type", {"video/mp4", "audio/ogg", "image/webp"}), str("media")}),
        tag("span", T, {str("id"), str("class")}),
        tag("strong", T, {}),
        tag("sub", T, {}),
        tag("summary", T, {}),
        tag("sup", T, {}),
        tag("table", N, {num("border", 0, 10), str("class")}),
        tag("tbody", N, {}),
        tag("td", T, {num("colspan", 1, 1000), num("rowspan", 1, 1000)}),
        tag("textarea", T, {str("name"), num("rows", 1, 500), num("cols", 1, 500), str("placeholder")}),
        tag("tfoot", N, {}),
        tag("th", T, {num("colspan", 1, 1000), num("rowspan", 1, 1000), fixed("scope", {"row", "col", "rowgroup", "colgroup"})}),
        tag("thead", N, {}),
        tag("time", T, {str("datetime")}),
        tag("tr", N, {str("class")}),
        tag("track", V, {url("src"), fixed("kind", {"subtitles", "captions", "chapters", "metadata"}), str("label")}),
        tag("u", T, {}),
        tag("ul", N, {str("class"), str("id")}),
        tag("var", T, {}),
        tag("video", N, {url("src"), num("width", 0, 4096), num("height", 0, 4096), fixed("controls", {"controls"}), fixed("muted", {"muted"}), url("poster")}),
        tag("wbr", V, {}),
    };
    return cfg;
}

}  // namespace rlfuzz::grammar
