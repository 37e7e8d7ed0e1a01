#include "rlfuzz/toy_target.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <string>
#include <vector>

namespace rlfuzz::cov {

namespace {

// lifecycle
constexpr uint32_t P_START = 0;
constexpr uint32_t P_SCANNED = 1;
constexpr uint32_t P_FINALIZED = 2;
constexpr uint32_t P_EPILOGUE = 3;

// tokenizer
constexpr uint32_t P_DATA_CHAR = 10;
constexpr uint32_t P_TAG_OPEN = 11;
constexpr uint32_t P_END_TAG_OPEN = 12;
constexpr uint32_t P_TAG_NAME_CHAR = 13;
constexpr uint32_t P_TAG_NAME_DONE = 14;
constexpr uint32_t P_BEFORE_ATTR_NAME = 15;
constexpr uint32_t P_ATTR_NAME_CHAR = 16;
constexpr uint32_t P_ATTR_NAME_DONE = 17;
constexpr uint32_t P_BEFORE_ATTR_VALUE = 18;
constexpr uint32_t P_ATTR_VALUE_DQ = 19;
constexpr uint32_t P_ATTR_VALUE_SQ = 20;
constexpr uint32_t P_ATTR_VALUE_UNQ = 21;
constexpr uint32_t P_ATTR_VALUE_DONE = 22;
constexpr uint32_t P_SELF_CLOSING_SLASH = 23;
constexpr uint32_t P_TAG_FINISHED = 24;
constexpr uint32_t P_END_TAG_FINISHED = 25;
constexpr uint32_t P_MARKUP_DECL = 26;
constexpr uint32_t P_COMMENT_ENTER = 27;
constexpr uint32_t P_COMMENT_CHAR = 28;
constexpr uint32_t P_COMMENT_END = 29;
constexpr uint32_t P_DOCTYPE_ENTER = 30;
constexpr uint32_t P_DOCTYPE_DONE = 31;
constexpr uint32_t P_RAWTEXT_ENTER = 32;
constexpr uint32_t P_RAWTEXT_CHAR = 33;
constexpr uint32_t P_RAWTEXT_END_TAG = 34;
constexpr uint32_t P_WS_IN_DATA = 35;
constexpr uint32_t P_ATTR_NO_VALUE = 36;
constexpr uint32_t P_BOGUS_COMMENT = 37;
constexpr uint32_t P_BOGUS_COMMENT_DONE = 38;
constexpr uint32_t P_CDATA_LIKE = 39;

// error recovery
constexpr uint32_t P_E_LT_NONLETTER = 60;
constexpr uint32_t P_E_EOF_IN_TAG = 61;
constexpr uint32_t P_E_EOF_IN_ATTR_VALUE = 62;
constexpr uint32_t P_E_EOF_IN_COMMENT = 63;
constexpr uint32_t P_E_EOF_IN_DOCTYPE = 64;
constexpr uint32_t P_E_EOF_IN_RAWTEXT = 65;
constexpr uint32_t P_E_NULL_BYTE = 66;
constexpr uint32_t P_E_CONTROL_CHAR = 67;
constexpr uint32_t P_E_UNMATCHED_END_TAG = 68;
constexpr uint32_t P_E_END_TAG_WITH_ATTRS = 69;
constexpr uint32_t P_E_DUPLICATE_ATTR = 70;
constexpr uint32_t P_E_SELF_CLOSING_NONVOID = 71;
constexpr uint32_t P_E_DEPTH_CAP = 72;
constexpr uint32_t P_E_MISMATCH_RECOVERED = 73;
constexpr uint32_t P_E_EMPTY_END_TAG = 74;
constexpr uint32_t P_E_QUOTE_IN_UNQUOTED = 75;
constexpr uint32_t P_E_UNTERMINATED_ENTITY = 76;
constexpr uint32_t P_E_UNKNOWN_ENTITY = 77;
constexpr uint32_t P_E_ENTITY_NO_SEMI = 78;
constexpr uint32_t P_E_BAD_NUMERIC_ENTITY = 79;
constexpr uint32_t P_E_OVERLONG_ATTR_VALUE = 80;
constexpr uint32_t P_E_OVERLONG_TAG_NAME = 81;
constexpr uint32_t P_E_OVERLONG_ATTR_NAME = 82;
constexpr uint32_t P_E_ABRUPT_COMMENT_CLOSE = 83;
constexpr uint32_t P_E_DOCTYPE_BOGUS = 84;
constexpr uint32_t P_E_UNCLOSED_AT_EOF = 85;
constexpr uint32_t P_E_CHARS_AFTER_SLASH = 86;
constexpr uint32_t P_E_UNEXPECTED_EQ = 87;
constexpr uint32_t P_E_MANY_ATTRS = 88;
constexpr uint32_t P_E_DEEP_MISNESTING = 89;

// character references
constexpr uint32_t P_ENT_AMP = 90;
constexpr uint32_t P_ENT_LT = 91;
constexpr uint32_t P_ENT_GT = 92;
constexpr uint32_t P_ENT_QUOT = 93;
constexpr uint32_t P_ENT_APOS = 94;
constexpr uint32_t P_ENT_DEC = 95;
constexpr uint32_t P_ENT_HEX = 96;
constexpr uint32_t P_ENT_NBSP = 97;
constexpr uint32_t P_ENT_IN_ATTR = 98;
constexpr uint32_t P_ENT_OTHER_NAMED = 99;

// attribute name classes
constexpr uint32_t P_AN_BASE = 100;  // see kAttrNames ordering
constexpr uint32_t P_AN_DATA = 138;
constexpr uint32_t P_AN_OTHER = 139;

// attribute value classes
constexpr uint32_t P_AV_EMPTY = 140;
constexpr uint32_t P_AV_DQUOTED = 141;
constexpr uint32_t P_AV_SQUOTED = 142;
constexpr uint32_t P_AV_UNQUOTED = 143;
constexpr uint32_t P_AV_NUMERIC = 144;
constexpr uint32_t P_AV_URL = 145;
constexpr uint32_t P_AV_FRAGMENT = 146;
constexpr uint32_t P_AV_HAS_ENTITY = 147;
constexpr uint32_t P_AV_OVERLONG = 148;
constexpr uint32_t P_AV_BOOLEAN = 149;

// structure
constexpr uint32_t P_DEPTH_BASE = 150;  // depth >= 1,2,4,8,16,32 -> 150..155
constexpr uint32_t P_IC_P = 156;
constexpr uint32_t P_IC_LI = 157;
constexpr uint32_t P_IC_DEF = 158;
constexpr uint32_t P_IC_TR = 159;
constexpr uint32_t P_IC_CELL = 160;
constexpr uint32_t P_IC_OPTION = 161;
constexpr uint32_t P_IC_SECTION_GROUP = 162;
constexpr uint32_t P_IC_HEADING = 163;
constexpr uint32_t P_PAIR_BASE = 165;  // see kNestPairs -> 165..184
constexpr uint32_t P_VOID_ELEMENT = 185;
constexpr uint32_t P_SELF_CLOSE_VOID = 186;
constexpr uint32_t P_UNKNOWN_TAG = 187;
constexpr uint32_t P_TEMPLATE_CONTENT = 188;
constexpr uint32_t P_NESTED_FORM = 189;
constexpr uint32_t P_UNKNOWN_BUCKET_BASE = 190;  // 190..199

constexpr uint32_t P_TAG_BASE = 200;       // open 200+2i, close 201+2i
constexpr uint32_t P_TAG_ATTR_BASE = 500;  // attributed open 500+i

constexpr int kDepthCap = 64;
constexpr int kAttrCap = 16;

const char* const kKnownTags[] = {
    "a",        "abbr",   "address", "area",     "article",  "aside",      "audio",    "b",
    "base",     "bdi",    "bdo",     "blockquote", "body",   "br",         "button",   "canvas",
    "caption",  "cite",   "code",    "col",      "colgroup", "data",       "datalist", "dd",
    "del",      "details","dfn",     "dialog",   "div",      "dl",         "dt",       "em",
    "embed",    "fieldset","figcaption", "figure", "footer", "form",       "h1",       "h2",
    "h3",       "h4",     "h5",      "h6",       "head",     "header",     "hr",       "html",
    "i",        "iframe", "img",     "input",    "ins",      "kbd",        "label",    "legend",
    "li",       "link",   "main",    "map",      "mark",     "menu",       "meta",     "meter",
    "nav",      "noscript","object", "ol",       "optgroup", "option",     "output",   "p",
    "param",    "picture","pre",     "progress", "q",        "rp",         "rt",       "ruby",
    "s",        "samp",   "section", "select",   "small",    "source",     "span",     "strong",
    "style",    "sub",    "summary", "sup",      "table",    "tbody",      "td",       "template",
    "textarea", "tfoot",  "th",      "thead",    "time",     "title",      "tr",       "track",
    "u",        "ul",     "var",     "video",    "wbr",
};
constexpr size_t kKnownTagCount = sizeof(kKnownTags) / sizeof(kKnownTags[0]);

const char* const kVoidTags[] = {"area", "base", "br",    "col",  "embed",  "hr",    "img",
                                 "input", "link", "meta", "param", "source", "track", "wbr"};

const char* const kRawTextTags[] = {"style", "textarea", "title"};

const char* const kAttrNames[] = {
    "href",   "src",     "id",      "class",  "style", "title",  "name",    "value",
    "type",   "width",   "height",  "colspan", "rowspan", "alt", "target",  "rel",
    "placeholder", "min", "max",    "size",   "maxlength", "tabindex", "lang", "dir",
    "action", "method",  "for",     "rows",   "cols",  "span",   "start",   "loop",
    "controls", "poster", "cite",   "datetime", "open", "disabled",
};
constexpr size_t kAttrNameCount = sizeof(kAttrNames) / sizeof(kAttrNames[0]);

struct NestPair {
    const char* parent;
    const char* child;
};
const NestPair kNestPairs[] = {
    {"ul", "li"},      {"ol", "li"},        {"table", "tr"},    {"tr", "td"},
    {"tr", "th"},      {"select", "option"}, {"dl", "dt"},      {"dl", "dd"},
    {"form", "input"}, {"figure", "figcaption"}, {"details", "summary"}, {"video", "source"},
    {"audio", "source"}, {"picture", "source"}, {"map", "area"}, {"ruby", "rt"},
    {"ruby", "rp"},    {"optgroup", "option"}, {"fieldset", "legend"}, {"table", "caption"},
};
constexpr size_t kNestPairCount = sizeof(kNestPairs) / sizeof(kNestPairs[0]);

bool in_list(const char* const* list, size_t n, std::string_view name) {
    for (size_t i = 0; i < n; ++i)
        if (name == list[i]) return true;
    return false;
}

int tag_index(std::string_view name) {
    for (size_t i = 0; i < kKnownTagCount; ++i)
        if (name == kKnownTags[i]) return int(i);
    return -1;
}

bool is_void_tag(std::string_view name) { return in_list(kVoidTags, 14, name); }
bool is_rawtext_tag(std::string_view name) { return in_list(kRawTextTags, 3, name); }
bool is_heading(std::string_view name) {
    return name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6';
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

struct Attr {
    std::string name;
    std::string value;
    char quote = 0;  // 0 none, '"', '\'' , 'u' unquoted
    bool has_value = false;
    bool had_entity = false;
};

struct PendingTag {
    std::string name;
    std::vector<Attr> attrs;
    bool closing = false;
    bool self_closing = false;
};

class ToyParser {
public:
    explicit ToyParser(std::string_view input) : in_(input) {}

    CoverageSet run() {
        probe(P_START);
        scan();
        probe(P_SCANNED);
        finalize_tree();
        probe(P_FINALIZED);
        probe(P_EPILOGUE);
        return std::move(hits_);
    }

private:
    void probe(uint32_t id) { hits_.insert(BasicBlockId{kToyModuleId, id}); }

    char at(size_t i) const { return i < in_.size() ? char(in_[i]) : '\0'; }
    bool done() const { return pos_ >= in_.size(); }

    void scan() {
        while (!done()) {
            char c = char(in_[pos_]);
            if (c == '<') {
                ++pos_;
                scan_tag_open();
            } else {
                scan_data_char(c);
                ++pos_;
            }
        }
    }

    void scan_data_char(char c) {
        if (c == '\0') {
            probe(P_E_NULL_BYTE);
        } else if (is_ws(c)) {
            probe(P_WS_IN_DATA);
        } else if (c == '&') {
            consume_entity(false);
            return;  // consume_entity advanced nothing; pos_ advanced by caller
        } else if (static_cast<unsigned char>(c) < 0x20) {
            probe(P_E_CONTROL_CHAR);
        } else {
            probe(P_DATA_CHAR);
        }
    }

    // pos_ points just past '<'
    void scan_tag_open() {
        probe(P_TAG_OPEN);
        if (done()) {
            probe(P_E_EOF_IN_TAG);
            return;
        }
        char c = char(in_[pos_]);
        if (c == '!') {
            ++pos_;
            scan_markup_declaration();
        } else if (c == '/') {
            ++pos_;
            probe(P_END_TAG_OPEN);
            scan_end_tag();
        } else if (is_alpha(c)) {
            scan_start_tag();
        } else {
            // literal '<' in text
            probe(P_E_LT_NONLETTER);
        }
    }

    void scan_start_tag() {
        PendingTag tag;
        while (!done()) {
            char c = char(in_[pos_]);
            if (is_alpha(c) || (c >= '0' && c <= '9') || c == '-') {
                probe(P_TAG_NAME_CHAR);
                if (tag.name.size() < 256) tag.name += lower(c);
                ++pos_;
            } else {
                break;
            }
        }
        if (tag.name.size() > 32) probe(P_E_OVERLONG_TAG_NAME);
        probe(P_TAG_NAME_DONE);
        scan_attributes(tag);
    }

    void scan_end_tag() {
        if (!done() && char(in_[pos_]) == '>') {
            probe(P_E_EMPTY_END_TAG);
            ++pos_;
            return;
        }
        PendingTag tag;
        tag.closing = true;
        while (!done()) {
            char c = char(in_[pos_]);
            if (is_alpha(c) || (c >= '0' && c <= '9') || c == '-') {
                if (tag.name.size() < 256) tag.name += lower(c);
                ++pos_;
            } else {
                break;
            }
        }
        // skip anything until '>'; attributes on end tags are an error
        bool saw_attr = false;
        while (!done() && char(in_[pos_]) != '>') {
            if (!is_ws(char(in_[pos_]))) saw_attr = true;
            ++pos_;
        }
        if (saw_attr) probe(P_E_END_TAG_WITH_ATTRS);
        if (done()) {
            probe(P_E_EOF_IN_TAG);
            return;
        }
        ++pos_;  // '>'
        probe(P_END_TAG_FINISHED);
        handle_end_tag(tag.name);
    }

    void scan_attributes(PendingTag& tag) {
        while (true) {
            while (!done() && is_ws(char(in_[pos_]))) {
                probe(P_BEFORE_ATTR_NAME);
                ++pos_;
            }
            if (done()) {
                probe(P_E_EOF_IN_TAG);
                return;
            }
            char c = char(in_[pos_]);
            if (c == '>') {
                ++pos_;
                probe(P_TAG_FINISHED);
                handle_start_tag(tag);
                return;
            }
            if (c == '/') {
                probe(P_SELF_CLOSING_SLASH);
                ++pos_;
                while (!done() && char(in_[pos_]) != '>') {
                    probe(P_E_CHARS_AFTER_SLASH);
                    ++pos_;
                }
                if (done()) {
                    probe(P_E_EOF_IN_TAG);
                    return;
                }
                ++pos_;
                tag.self_closing = true;
                probe(P_TAG_FINISHED);
                handle_start_tag(tag);
                return;
            }
            if (c == '=') {
                probe(P_E_UNEXPECTED_EQ);
                ++pos_;
                continue;
            }
            // attribute name
            Attr attr;
            while (!done()) {
                c = char(in_[pos_]);
                if (is_ws(c) || c == '=' || c == '>' || c == '/') break;
                probe(P_ATTR_NAME_CHAR);
                if (attr.name.size() < 512) attr.name += lower(c);
                ++pos_;
            }
            if (attr.name.size() > 64) probe(P_E_OVERLONG_ATTR_NAME);
            probe(P_ATTR_NAME_DONE);
            while (!done() && is_ws(char(in_[pos_]))) ++pos_;
            if (!done() && char(in_[pos_]) == '=') {
                probe(P_BEFORE_ATTR_VALUE);
                ++pos_;
                attr.has_value = true;
                scan_attr_value(attr);
            } else {
                probe(P_ATTR_NO_VALUE);
            }
            for (const auto& existing : tag.attrs)
                if (existing.name == attr.name) {
                    probe(P_E_DUPLICATE_ATTR);
                    break;
                }
            if (tag.attrs.size() >= kAttrCap) probe(P_E_MANY_ATTRS);
            tag.attrs.push_back(std::move(attr));
        }
    }

    void scan_attr_value(Attr& attr) {
        while (!done() && is_ws(char(in_[pos_]))) ++pos_;
        if (done()) {
            probe(P_E_EOF_IN_ATTR_VALUE);
            return;
        }
        char c = char(in_[pos_]);
        if (c == '"' || c == '\'') {
            probe(c == '"' ? P_ATTR_VALUE_DQ : P_ATTR_VALUE_SQ);
            attr.quote = c;
            ++pos_;
            while (!done() && char(in_[pos_]) != c) {
                if (char(in_[pos_]) == '&') {
                    probe(P_ENT_IN_ATTR);
                    attr.had_entity = true;
                    consume_entity(true);
                }
                if (attr.value.size() < 4096) attr.value += char(in_[pos_]);
                ++pos_;
            }
            if (done()) {
                probe(P_E_EOF_IN_ATTR_VALUE);
                return;
            }
            ++pos_;  // closing quote
        } else {
            probe(P_ATTR_VALUE_UNQ);
            attr.quote = 'u';
            while (!done()) {
                c = char(in_[pos_]);
                if (is_ws(c) || c == '>') break;
                if (c == '"' || c == '\'') probe(P_E_QUOTE_IN_UNQUOTED);
                if (c == '&') {
                    probe(P_ENT_IN_ATTR);
                    attr.had_entity = true;
                    consume_entity(true);
                }
                if (attr.value.size() < 4096) attr.value += c;
                ++pos_;
            }
        }
        probe(P_ATTR_VALUE_DONE);
    }

    // pos_ points at '&'; examines the reference without consuming it (the
    // caller advances through the value/data characters as usual)
    void consume_entity(bool in_attr) {
        (void)in_attr;
        size_t p = pos_ + 1;
        if (p >= in_.size()) {
            probe(P_E_UNTERMINATED_ENTITY);
            return;
        }
        if (at(p) == '#') {
            ++p;
            bool hex = at(p) == 'x' || at(p) == 'X';
            if (hex) ++p;
            size_t digits = 0;
            while (p < in_.size() && (hex ? std::isxdigit(static_cast<unsigned char>(at(p)))
                                          : std::isdigit(static_cast<unsigned char>(at(p))))) {
                ++p;
                ++digits;
            }
            if (digits == 0) {
                probe(P_E_BAD_NUMERIC_ENTITY);
            } else if (at(p) == ';') {
                probe(hex ? P_ENT_HEX : P_ENT_DEC);
            } else {
                probe(P_E_ENTITY_NO_SEMI);
            }
            return;
        }
        std::string name;
        while (p < in_.size() && is_alpha(at(p)) && name.size() < 32) {
            name += lower(at(p));
            ++p;
        }
        if (name.empty()) {
            probe(P_E_UNTERMINATED_ENTITY);
            return;
        }
        bool terminated = at(p) == ';';
        if (!terminated) {
            probe(P_E_ENTITY_NO_SEMI);
            return;
        }
        if (name == "amp") probe(P_ENT_AMP);
        else if (name == "lt") probe(P_ENT_LT);
        else if (name == "gt") probe(P_ENT_GT);
        else if (name == "quot") probe(P_ENT_QUOT);
        else if (name == "apos") probe(P_ENT_APOS);
        else if (name == "nbsp") probe(P_ENT_NBSP);
        else if (name == "copy" || name == "reg" || name == "trade" || name == "hellip" ||
                 name == "mdash" || name == "ndash" || name == "laquo" || name == "raquo")
            probe(P_ENT_OTHER_NAMED);
        else probe(P_E_UNKNOWN_ENTITY);
    }

    void scan_markup_declaration() {
        probe(P_MARKUP_DECL);
        if (in_.compare(pos_, 2, "--") == 0) {
            pos_ += 2;
            scan_comment();
        } else if (in_.size() - pos_ >= 7 && strncasecmp(in_.data() + pos_, "doctype", 7) == 0) {
            pos_ += 7;
            scan_doctype();
        } else if (at(pos_) == '[') {
            probe(P_CDATA_LIKE);
            skip_bogus_comment();
        } else {
            probe(P_BOGUS_COMMENT);
            skip_bogus_comment();
        }
    }

    void scan_comment() {
        probe(P_COMMENT_ENTER);
        if (in_.compare(pos_, 1, ">") == 0 || in_.compare(pos_, 2, "->") == 0) {
            probe(P_E_ABRUPT_COMMENT_CLOSE);
            pos_ += at(pos_) == '>' ? 1 : 2;
            return;
        }
        while (pos_ < in_.size()) {
            if (in_.compare(pos_, 3, "-->") == 0) {
                pos_ += 3;
                probe(P_COMMENT_END);
                return;
            }
            probe(P_COMMENT_CHAR);
            ++pos_;
        }
        probe(P_E_EOF_IN_COMMENT);
    }

    void scan_doctype() {
        probe(P_DOCTYPE_ENTER);
        std::string body;
        while (pos_ < in_.size() && char(in_[pos_]) != '>') {
            body += lower(char(in_[pos_]));
            ++pos_;
        }
        if (done()) {
            probe(P_E_EOF_IN_DOCTYPE);
            return;
        }
        ++pos_;
        if (body.find("html") == std::string::npos) probe(P_E_DOCTYPE_BOGUS);
        probe(P_DOCTYPE_DONE);
    }

    void skip_bogus_comment() {
        while (pos_ < in_.size() && char(in_[pos_]) != '>') ++pos_;
        if (!done()) {
            ++pos_;
            probe(P_BOGUS_COMMENT_DONE);
        } else {
            probe(P_E_EOF_IN_COMMENT);
        }
    }

    // rawtext elements swallow everything until their matching end tag
    void scan_rawtext(const std::string& element) {
        probe(P_RAWTEXT_ENTER);
        std::string close = "</" + element;
        while (pos_ < in_.size()) {
            if (char(in_[pos_]) == '<' && in_.size() - pos_ >= close.size()) {
                bool match = true;
                for (size_t i = 0; i < close.size(); ++i)
                    if (lower(char(in_[pos_ + i])) != close[i]) {
                        match = false;
                        break;
                    }
                if (match) {
                    pos_ += close.size();
                    while (pos_ < in_.size() && char(in_[pos_]) != '>') ++pos_;
                    if (!done()) ++pos_;
                    probe(P_RAWTEXT_END_TAG);
                    return;
                }
            }
            probe(P_RAWTEXT_CHAR);
            ++pos_;
        }
        probe(P_E_EOF_IN_RAWTEXT);
    }

    // ---- tree builder ----

    void handle_start_tag(const PendingTag& tag) {
        classify_attrs(tag);
        int idx = tag_index(tag.name);
        if (idx < 0) {
            probe(P_UNKNOWN_TAG);
            uint32_t h = 0;
            for (char c : tag.name) h = h * 31 + uint32_t(uint8_t(c));
            probe(P_UNKNOWN_BUCKET_BASE + h % 10);
            return;
        }
        probe(P_TAG_BASE + 2 * uint32_t(idx));
        if (!tag.attrs.empty()) probe(P_TAG_ATTR_BASE + uint32_t(idx));

        implicit_closes(tag.name);

        if (!stack_.empty()) {
            const std::string& parent = stack_.back();
            for (size_t i = 0; i < kNestPairCount; ++i)
                if (parent == kNestPairs[i].parent && tag.name == kNestPairs[i].child)
                    probe(P_PAIR_BASE + uint32_t(i));
            if (tag.name == "form" &&
                std::find(stack_.begin(), stack_.end(), "form") != stack_.end())
                probe(P_NESTED_FORM);
        }
        if (tag.name == "template") probe(P_TEMPLATE_CONTENT);

        if (is_void_tag(tag.name)) {
            probe(P_VOID_ELEMENT);
            if (tag.self_closing) probe(P_SELF_CLOSE_VOID);
            return;  // never pushed
        }
        if (tag.self_closing) probe(P_E_SELF_CLOSING_NONVOID);

        if (int(stack_.size()) >= kDepthCap) {
            probe(P_E_DEPTH_CAP);
            return;
        }
        stack_.push_back(tag.name);
        depth_probes();

        if (is_rawtext_tag(tag.name)) {
            scan_rawtext(tag.name);
            stack_.pop_back();
        }
    }

    void handle_end_tag(const std::string& name) {
        int idx = tag_index(name);
        if (idx >= 0) probe(P_TAG_BASE + 2 * uint32_t(idx) + 1);

        auto it = std::find(stack_.rbegin(), stack_.rend(), name);
        if (it == stack_.rend()) {
            probe(P_E_UNMATCHED_END_TAG);
            return;
        }
        size_t levels = size_t(it - stack_.rbegin());
        if (levels > 0) probe(P_E_MISMATCH_RECOVERED);
        if (levels > 8) probe(P_E_DEEP_MISNESTING);
        stack_.resize(stack_.size() - levels - 1);
    }

    void implicit_closes(const std::string& incoming) {
        if (stack_.empty()) return;
        const std::string& top = stack_.back();
        auto close_top = [&](uint32_t p) {
            probe(p);
            stack_.pop_back();
        };
        if (incoming == "p" && top == "p") close_top(P_IC_P);
        else if (incoming == "li" && top == "li") close_top(P_IC_LI);
        else if ((incoming == "dt" || incoming == "dd") && (top == "dt" || top == "dd"))
            close_top(P_IC_DEF);
        else if (incoming == "tr" && top == "tr") close_top(P_IC_TR);
        else if ((incoming == "td" || incoming == "th") && (top == "td" || top == "th"))
            close_top(P_IC_CELL);
        else if (incoming == "option" && top == "option") close_top(P_IC_OPTION);
        else if ((incoming == "thead" || incoming == "tbody" || incoming == "tfoot") &&
                 (top == "thead" || top == "tbody" || top == "tfoot"))
            close_top(P_IC_SECTION_GROUP);
        else if (is_heading(incoming) && is_heading(top)) close_top(P_IC_HEADING);
    }

    void classify_attrs(const PendingTag& tag) {
        for (const auto& a : tag.attrs) {
            bool named = false;
            for (size_t i = 0; i < kAttrNameCount; ++i)
                if (a.name == kAttrNames[i]) {
                    probe(P_AN_BASE + uint32_t(i));
                    named = true;
                    break;
                }
            if (!named) {
                if (a.name.rfind("data-", 0) == 0) probe(P_AN_DATA);
                else probe(P_AN_OTHER);
            }

            if (!a.has_value) {
                probe(P_AV_BOOLEAN);
                continue;
            }
            if (a.value.empty()) probe(P_AV_EMPTY);
            if (a.quote == '"') probe(P_AV_DQUOTED);
            else if (a.quote == '\'') probe(P_AV_SQUOTED);
            else if (a.quote == 'u') probe(P_AV_UNQUOTED);
            if (!a.value.empty()) {
                bool numeric = true;
                for (char c : a.value)
                    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-' && c != '+') {
                        numeric = false;
                        break;
                    }
                if (numeric) probe(P_AV_NUMERIC);
                if (a.value.find("://") != std::string::npos || a.value.rfind("http", 0) == 0 ||
                    a.value.rfind("ftp", 0) == 0)
                    probe(P_AV_URL);
                if (a.value[0] == '#') probe(P_AV_FRAGMENT);
                if (a.had_entity) probe(P_AV_HAS_ENTITY);
                if (a.value.size() > 128) {
                    probe(P_AV_OVERLONG);
                    if (a.value.size() > 256) probe(P_E_OVERLONG_ATTR_VALUE);
                }
            }
        }
    }

    void depth_probes() {
        size_t d = stack_.size();
        static const size_t thresholds[] = {1, 2, 4, 8, 16, 32};
        for (int i = 0; i < 6; ++i)
            if (d >= thresholds[i]) probe(P_DEPTH_BASE + uint32_t(i));
    }

    void finalize_tree() {
        if (!stack_.empty()) probe(P_E_UNCLOSED_AT_EOF);
        stack_.clear();
    }

    std::string_view in_;
    size_t pos_ = 0;
    std::vector<std::string> stack_;
    CoverageSet hits_;
};

}  // namespace

CoverageSet toy_target_execute(std::string_view html) { return ToyParser(html).run(); }

CoverageSet toy_baseline_probes() {
    CoverageSet s;
    for (uint32_t p : {P_START, P_SCANNED, P_FINALIZED, P_EPILOGUE})
        s.insert(BasicBlockId{kToyModuleId, p});
    return s;
}

size_t toy_probe_count() {
    // lifecycle + tokenizer + errors + entities + attr names/values +
    // structure + unknown buckets + per-tag open/close + attributed opens
    return 4 + 30 + 30 + 10 + (kAttrNameCount + 2) + 10 + (6 + 8 + kNestPairCount + 5) + 10 +
           2 * kKnownTagCount + kKnownTagCount;
}

size_t toy_known_tag_count() { return kKnownTagCount; }

int toy_tag_index(std::string_view name) { return tag_index(name); }

}  // namespace rlfuzz::cov
