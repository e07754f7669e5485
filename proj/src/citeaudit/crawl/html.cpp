#include "citeaudit/crawl/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include "citeaudit/common/error.hpp"
#include "citeaudit/common/text.hpp"

namespace citeaudit::crawl {

namespace {

bool in(std::string_view s, std::initializer_list<std::string_view> set) {
    return std::find(set.begin(), set.end(), s) != set.end();
}

bool is_void(std::string_view t) {
    return in(t, {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
                  "track", "wbr"});
}

bool is_raw_text(std::string_view t) { return in(t, {"script", "style", "title", "textarea", "noscript"}); }

bool is_block(std::string_view t) {
    return in(t, {"address", "article", "aside", "blockquote", "body", "caption", "dd", "details", "dialog", "div",
                  "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
                  "h6", "header", "hr", "html", "legend", "li", "main", "nav", "ol", "option", "p", "pre", "section",
                  "summary", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul", "br"});
}

bool is_hidden_tag(std::string_view t) {
    return in(t, {"script", "style", "noscript", "template", "head", "svg", "iframe", "object", "canvas", "title"});
}

bool closes_p(std::string_view t) {
    return t != "br" && t != "hr" && is_block(t) && !in(t, {"body", "html", "li", "td", "th", "tr", "dd", "dt"});
}

std::string lower(std::string_view s) { return text::to_lower(s); }

const std::unordered_map<std::string_view, std::string_view>& named_entities() {
    static const std::unordered_map<std::string_view, std::string_view> m{
        {"amp", "&"},        {"lt", "<"},          {"gt", ">"},          {"quot", "\""},       {"apos", "'"},
        {"nbsp", " "},       {"mdash", "—"},  {"ndash", "–"},  {"hellip", "…"}, {"rsquo", "’"},
        {"lsquo", "‘"}, {"rdquo", "”"},  {"ldquo", "“"},  {"copy", "©"},   {"reg", "®"},
        {"trade", "™"}, {"laquo", "«"},  {"raquo", "»"},  {"middot", "·"}, {"bull", "•"},
        {"eacute", "é"}, {"egrave", "è"}, {"aacute", "á"}, {"agrave", "à"}, {"ouml", "ö"},
        {"uuml", "ü"},  {"auml", "ä"},   {"szlig", "ß"},  {"ccedil", "ç"}, {"ntilde", "ñ"},
        {"deg", "°"},   {"times", "×"},  {"euro", "€"},   {"pound", "£"},  {"shy", ""},
        {"zwnj", ""},        {"zwj", ""},          {"thinsp", " "},      {"ensp", " "},        {"emsp", " "},
    };
    return m;
}

struct Builder {
    std::string out;
    bool pending_space = false;
    bool pending_newline = false;

    void flush() {
        if (!out.empty()) {
            if (pending_newline) out += '\n';
            else if (pending_space) out += ' ';
        }
        pending_space = pending_newline = false;
    }
    void add(std::string_view t, bool preformatted) {
        if (preformatted) {
            if (t.empty()) return;
            flush();
            out.append(t);
            return;
        }
        for (char c : t) {
            if (text::is_space(c)) {
                pending_space = true;
            } else {
                flush();
                out += c;
            }
        }
    }
    void block() { pending_newline = true; }
};

std::vector<std::string> class_tokens(const HtmlNode& n) {
    std::vector<std::string> out;
    for (auto key : {"class", "id"}) {
        std::string cur;
        for (char c : n.attr(key)) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
    }
    return out;
}

bool has_ancestor(const HtmlNode& n, std::initializer_list<std::string_view> tags) {
    for (auto* p = n.parent; p; p = p->parent)
        if (in(p->tag, tags)) return true;
    return false;
}

bool is_hidden(const HtmlNode& n) {
    if (is_hidden_tag(n.tag)) return true;
    for (const auto& [k, v] : n.attrs) {
        if (k == "hidden") return true;
        if (k == "aria-hidden" && lower(v) == "true") return true;
        if (k == "style") {
            std::string s;
            for (char c : lower(v))
                if (!text::is_space(c)) s += c;
            if (s.find("display:none") != std::string::npos || s.find("visibility:hidden") != std::string::npos)
                return true;
        }
    }
    return false;
}

bool is_boilerplate(const HtmlNode& n) {
    if (in(n.tag, {"nav", "aside", "footer", "form", "button", "menu"})) return true;
    if (n.tag == "header" && !has_ancestor(n, {"article", "main"})) return true;
    for (const auto& t : class_tokens(n)) {
        if (in(t, {"comment", "comments", "share", "sharing", "social", "related", "advert", "advertisement", "ads",
                   "ad", "promo", "cookie", "cookies", "newsletter", "breadcrumb", "breadcrumbs", "sidebar", "menu",
                   "navbar", "nav", "footer", "subscribe", "popup", "modal", "banner"}))
            return true;
    }
    return false;
}

void render(const HtmlNode& n, Builder& b, bool skip_boilerplate, bool pre) {
    if (n.is_text()) {
        b.add(n.text, pre);
        return;
    }
    if (is_hidden(n)) return;
    if (skip_boilerplate && is_boilerplate(n)) return;
    const bool block = is_block(n.tag);
    if (block) b.block();
    const bool inner_pre = pre || n.tag == "pre";
    for (const auto& c : n.children) render(*c, b, skip_boilerplate, inner_pre);
    if (block) b.block();
}

// Non-space bytes of visible text, total and inside links.
void count_chars(const HtmlNode& n, bool in_link, std::size_t& total, std::size_t& linked) {
    if (n.is_text()) {
        for (char c : n.text) {
            if (text::is_space(c)) continue;
            ++total;
            if (in_link) linked += 1;
        }
        return;
    }
    if (is_hidden(n)) return;
    for (const auto& c : n.children) count_chars(*c, in_link || n.tag == "a", total, linked);
}

double link_density(const HtmlNode& n) {
    std::size_t total = 0, linked = 0;
    count_chars(n, false, total, linked);
    return total ? static_cast<double>(linked) / static_cast<double>(total) : 0.0;
}

template <typename Pred>
void collect(const HtmlNode& n, Pred pred, std::vector<const HtmlNode*>& out) {
    if (n.is_text()) return;
    if (pred(n)) out.push_back(&n);
    for (const auto& c : n.children) collect(*c, pred, out);
}

std::string tidy(std::string s) {
    // drop empty lines and trim each line
    std::string out;
    for (auto line : text::split(s, '\n')) {
        auto t = text::trim(line);
        if (t.empty()) continue;
        if (!out.empty()) out += '\n';
        out.append(t);
    }
    return out;
}

std::string structural(const HtmlNode& root) {
    std::vector<const HtmlNode*> cands;
    collect(root, [](const HtmlNode& n) { return n.tag == "article" && !has_ancestor(n, {"article"}); }, cands);
    if (cands.empty()) collect(root, [](const HtmlNode& n) { return n.tag == "main"; }, cands);
    if (cands.empty()) collect(root, [](const HtmlNode& n) { return n.attr("role") == "main"; }, cands);
    std::string best;
    for (auto* c : cands) {
        if (is_hidden(*c)) continue;
        auto t = tidy(visible_text(*c, true));
        if (text::utf8_length(t) > text::utf8_length(best)) best = std::move(t);
    }
    return best;
}

int class_weight(const HtmlNode& n) {
    int w = 0;
    for (const auto& t : class_tokens(n)) {
        if (in(t, {"article", "body", "content", "entry", "main", "page", "post", "text", "blog", "story"})) w += 25;
        if (in(t, {"comment", "meta", "footer", "footnote", "sidebar", "nav", "menu", "ad", "share", "social",
                   "related", "widget", "promo"}))
            w -= 25;
    }
    return w;
}

double base_score(const HtmlNode& n) {
    double s = class_weight(n);
    if (n.tag == "div") s += 5;
    else if (in(n.tag, {"pre", "td", "blockquote"})) s += 3;
    else if (in(n.tag, {"address", "ol", "ul", "dl", "dd", "dt", "li", "form"})) s -= 3;
    else if (in(n.tag, {"h1", "h2", "h3", "h4", "h5", "h6", "th"})) s -= 5;
    return s;
}

void paragraphs(const HtmlNode& n, std::vector<const HtmlNode*>& out) {
    if (n.is_text() || is_hidden(n) || is_boilerplate(n)) return;
    if (in(n.tag, {"p", "pre", "td", "blockquote"})) out.push_back(&n);
    for (const auto& c : n.children) paragraphs(*c, out);
}

std::string readability(const HtmlNode& root) {
    std::vector<const HtmlNode*> paras;
    paragraphs(root, paras);
    std::unordered_map<const HtmlNode*, double> score;
    std::vector<const HtmlNode*> order;
    auto credit = [&](const HtmlNode* n, double s) {
        if (!n || n->tag == "#root") return;
        auto [it, fresh] = score.try_emplace(n, 0.0);
        if (fresh) {
            it->second = base_score(*n);
            order.push_back(n);
        }
        it->second += s;
    };
    for (auto* p : paras) {
        const auto t = tidy(visible_text(*p, true));
        const auto len = text::utf8_length(t);
        if (len < 25) continue;
        const double s = 1.0 + static_cast<double>(std::count(t.begin(), t.end(), ',')) +
                         std::min(static_cast<double>(len) / 100.0, 3.0);
        credit(p->parent, s);
        if (p->parent) credit(p->parent->parent, s / 2.0);
    }
    const HtmlNode* best = nullptr;
    double best_score = 0.0;
    for (auto* n : order) {
        const double s = score[n] * (1.0 - link_density(*n));
        if (!best || s > best_score) {
            best = n;
            best_score = s;
        }
    }
    return best ? tidy(visible_text(*best, true)) : std::string();
}

std::string first_title(const HtmlNode& n) {
    if (n.tag == "title") {
        std::string t;
        for (const auto& c : n.children) t += c->text;
        return text::collapse_whitespace(text::trim(t));
    }
    for (const auto& c : n.children) {
        if (c->is_text()) continue;
        auto t = first_title(*c);
        if (!t.empty()) return t;
    }
    return {};
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::string_view HtmlNode::attr(std::string_view name) const noexcept {
    for (const auto& [k, v] : attrs)
        if (k == name) return v;
    return {};
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] != '&') {
            out += s[i++];
            continue;
        }
        const auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += s[i++];
            continue;
        }
        const auto name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            unsigned long cp = 0;
            bool ok = name.size() > 1;
            const bool hex = ok && (name[1] == 'x' || name[1] == 'X');
            for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
                const char c = name[k];
                int d;
                if (c >= '0' && c <= '9') d = c - '0';
                else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
                else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
                else {
                    ok = false;
                    break;
                }
                cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(d);
                if (cp > 0x10FFFF) ok = false;
            }
            if (ok && hex && name.size() == 2) ok = false;
            if (ok) {
                if (cp == 0xA0) cp = ' ';
                if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
                text::append_utf8(out, static_cast<char32_t>(cp));
                i = semi + 1;
                continue;
            }
        } else if (auto it = named_entities().find(name); it != named_entities().end()) {
            out.append(it->second);
            i = semi + 1;
            continue;
        }
        out += s[i++];
    }
    return out;
}

std::unique_ptr<HtmlNode> parse_html(std::string_view html) {
    auto root = std::make_unique<HtmlNode>();
    root->tag = "#root";
    std::vector<HtmlNode*> stack{root.get()};
    const auto n = html.size();

    auto add_text = [&](std::string_view raw, bool decode = true) {
        if (raw.empty()) return;
        auto* cur = stack.back();
        if (!cur->children.empty() && cur->children.back()->is_text()) {
            cur->children.back()->text += decode ? decode_entities(raw) : std::string(raw);
            return;
        }
        auto t = std::make_unique<HtmlNode>();
        t->text = decode ? decode_entities(raw) : std::string(raw);
        t->parent = cur;
        cur->children.push_back(std::move(t));
    };
    auto pop_to = [&](std::string_view tag, std::initializer_list<std::string_view> boundary) {
        for (std::size_t k = stack.size(); k-- > 1;) {
            if (stack[k]->tag == tag) {
                stack.resize(k);
                return;
            }
            if (in(stack[k]->tag, boundary)) return;
        }
    };

    std::size_t i = 0;
    while (i < n) {
        const auto lt = html.find('<', i);
        if (lt == std::string_view::npos) {
            add_text(html.substr(i));
            break;
        }
        add_text(html.substr(i, lt - i));
        i = lt;
        if (html.compare(i, 4, "<!--") == 0) {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? n : end + 3;
            continue;
        }
        if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
            const auto end = html.find('>', i);
            i = end == std::string_view::npos ? n : end + 1;
            continue;
        }
        if (i + 1 < n && html[i + 1] == '/') {
            std::size_t k = i + 2;
            while (k < n && std::isalnum(static_cast<unsigned char>(html[k]))) ++k;
            const auto name = lower(html.substr(i + 2, k - i - 2));
            const auto end = html.find('>', k);
            i = end == std::string_view::npos ? n : end + 1;
            if (!name.empty()) pop_to(name, {});
            continue;
        }
        if (i + 1 >= n || !std::isalpha(static_cast<unsigned char>(html[i + 1]))) {
            add_text("<");
            ++i;
            continue;
        }

        std::size_t k = i + 1;
        while (k < n && (std::isalnum(static_cast<unsigned char>(html[k])) || html[k] == '-' || html[k] == ':')) ++k;
        auto node = std::make_unique<HtmlNode>();
        node->tag = lower(html.substr(i + 1, k - i - 1));
        bool self_closing = false;
        while (k < n) {
            while (k < n && text::is_space(html[k])) ++k;
            if (k >= n) break;
            if (html[k] == '>') {
                ++k;
                break;
            }
            if (html[k] == '/') {
                self_closing = k + 1 < n && html[k + 1] == '>';
                ++k;
                continue;
            }
            const auto ns = k;
            while (k < n && !text::is_space(html[k]) && html[k] != '=' && html[k] != '>' && html[k] != '/') ++k;
            auto name = lower(html.substr(ns, k - ns));
            while (k < n && text::is_space(html[k])) ++k;
            std::string value;
            if (k < n && html[k] == '=') {
                ++k;
                while (k < n && text::is_space(html[k])) ++k;
                if (k < n && (html[k] == '"' || html[k] == '\'')) {
                    const char q = html[k];
                    const auto end = html.find(q, k + 1);
                    const auto stop = end == std::string_view::npos ? n : end;
                    value = decode_entities(html.substr(k + 1, stop - k - 1));
                    k = stop == n ? n : stop + 1;
                } else {
                    const auto vs = k;
                    while (k < n && !text::is_space(html[k]) && html[k] != '>') ++k;
                    value = decode_entities(html.substr(vs, k - vs));
                }
            }
            if (!name.empty()) node->attrs.emplace_back(std::move(name), std::move(value));
            else if (k < n && html[k] != '>') ++k;
        }
        i = k;

        const auto& tag = node->tag;
        if (closes_p(tag)) pop_to("p", {"div", "section", "article", "main", "td", "th", "li", "blockquote", "body"});
        if (tag == "li") pop_to("li", {"ul", "ol", "menu"});
        if (tag == "dt" || tag == "dd") {
            pop_to("dt", {"dl"});
            pop_to("dd", {"dl"});
        }
        if (tag == "tr") pop_to("tr", {"table", "tbody", "thead", "tfoot"});
        if (tag == "td" || tag == "th") {
            pop_to("td", {"tr", "table"});
            pop_to("th", {"tr", "table"});
        }
        if (tag == "option") pop_to("option", {"select", "datalist"});

        auto* cur = stack.back();
        node->parent = cur;
        auto* raw = node.get();
        cur->children.push_back(std::move(node));
        if (self_closing || is_void(raw->tag)) continue;

        if (is_raw_text(raw->tag)) {
            // raw text runs to the matching end tag, case-insensitively
            std::size_t end = n;
            const std::string close = "</" + raw->tag;
            for (std::size_t p = html.find("</", i); p != std::string_view::npos; p = html.find("</", p + 2)) {
                if (text::starts_with_ci(html.substr(p), close)) {
                    end = p;
                    break;
                }
            }
            if (end > i) {
                stack.push_back(raw);
                add_text(html.substr(i, end - i), raw->tag == "title" || raw->tag == "textarea");
                stack.pop_back();
            }
            const auto gt = end == n ? n : html.find('>', end);
            i = gt == std::string_view::npos ? n : gt + 1;
            continue;
        }
        stack.push_back(raw);
    }
    return root;
}

std::string visible_text(const HtmlNode& node, bool skip_boilerplate) {
    Builder b;
    render(node, b, skip_boilerplate, false);
    return tidy(std::move(b.out));
}

std::string_view to_string(ExtractionMethod m) noexcept {
    switch (m) {
        case ExtractionMethod::Structural: return "structural";
        case ExtractionMethod::Readability: return "readability";
        case ExtractionMethod::VisibleText: return "visible_text";
        case ExtractionMethod::PlainText: return "plain_text";
    }
    return "visible_text";
}

ExtractedText extract_main_text_html(std::string_view html) {
    const auto root = parse_html(html);
    ExtractedText out;
    out.title = first_title(*root);
    out.link_density = link_density(*root);
    if (auto t = structural(*root); !t.empty()) {
        out.text = std::move(t);
        out.method = ExtractionMethod::Structural;
    } else if (auto r = readability(*root); !r.empty()) {
        out.text = std::move(r);
        out.method = ExtractionMethod::Readability;
    } else {
        out.text = visible_text(*root, false);
        out.method = ExtractionMethod::VisibleText;
    }
    return out;
}

bool is_unsupported_format(std::string_view body, std::string_view content_type) {
    const auto ct = lower(content_type);
    for (std::string_view p : {"application/pdf", "application/msword", "application/vnd.ms-",
                               "application/vnd.openxmlformats", "application/vnd.oasis.opendocument",
                               "application/zip", "application/octet-stream", "application/rtf", "image/", "audio/",
                               "video/", "font/"})
        if (starts_with(ct, p)) return true;
    for (std::string_view m : {std::string_view("%PDF-"), std::string_view("PK\x03\x04", 4),
                               std::string_view("\xD0\xCF\x11\xE0", 4), std::string_view("{\\rtf")})
        if (starts_with(body, m)) return true;
    return false;
}

ExtractedText extract_main_text(std::string_view body, std::string_view content_type) {
    if (is_unsupported_format(body, content_type))
        fail(ErrorCode::UnsupportedFormat, "non-HTML payload (" + std::string(content_type) + ")");
    if (starts_with(lower(content_type), "text/plain")) {
        ExtractedText out;
        out.text = std::string(text::trim(body));
        out.method = ExtractionMethod::PlainText;
        return out;
    }
    return extract_main_text_html(body);
}

}  // namespace citeaudit::crawl
