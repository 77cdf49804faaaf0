#pragma once

/**
 * @file command.hpp
 * @brief Natural-language correction commands and the program language
 *        they compile to.
 *
 * A command such as "Expand the boundary at the top-right corner, remove the
 * fragments at the bottom, and smooth the overall boundary." is split into
 * clauses; each clause yields one step. The program text format is
 *
 *     OBJ0=EXPAND(direction='TOP-RIGHT', in=MASK)
 *     OBJ1=REMOVE(direction='BOTTOM', in=OBJ0)
 *     OBJ2=SMOOTH(direction='OVERALL', in=OBJ1)
 *     FINAL=RESULT(var=OBJ2)
 *
 * with optional numeric overrides after `in=` (e.g. `area=30`).
 */

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "langseg/error.hpp"
#include "langseg/grid.hpp"

namespace langseg {

enum class OpKind { Expand, Shrink, Remove, Fill, Smooth, Foreground, Background, Result };

inline constexpr std::array<OpKind, 8> kAllOps = {OpKind::Expand, OpKind::Shrink,     OpKind::Remove,
                                                  OpKind::Fill,   OpKind::Smooth,     OpKind::Foreground,
                                                  OpKind::Background, OpKind::Result};

inline std::string_view opName(OpKind op) {
    switch (op) {
        case OpKind::Expand: return "EXPAND";
        case OpKind::Shrink: return "SHRINK";
        case OpKind::Remove: return "REMOVE";
        case OpKind::Fill: return "FILL";
        case OpKind::Smooth: return "SMOOTH";
        case OpKind::Foreground: return "FOREGROUND";
        case OpKind::Background: return "BACKGROUND";
        case OpKind::Result: return "RESULT";
    }
    return "RESULT";
}

inline std::optional<OpKind> opFromName(std::string_view name) {
    for (OpKind op : kAllOps)
        if (opName(op) == name) return op;
    return std::nullopt;
}

/// Numeric override keys each operation accepts in program text.
inline std::vector<std::string_view> overrideKeys(OpKind op) {
    switch (op) {
        case OpKind::Expand:
        case OpKind::Shrink: return {"granularity", "maxIters", "offset", "samplePercent"};
        case OpKind::Remove: return {"area"};
        case OpKind::Fill: return {"radius"};
        case OpKind::Smooth: return {"sigma", "thresh"};
        default: return {};
    }
}

struct Step {
    OpKind op = OpKind::Result;
    Direction direction = Direction::Overall;
    std::string inVar;   // consumed variable (RESULT: the returned one)
    std::string outVar;  // OBJk, or FINAL for RESULT
    std::map<std::string, double> overrides;

    friend bool operator==(const Step&, const Step&) = default;
};

struct Program {
    std::vector<Step> steps;
    friend bool operator==(const Program&, const Program&) = default;
};

class ParseError : public Error {
public:
    enum class Kind { EmptyCommand, UnrecognizedVerb, AmbiguousDirection, SyntaxError, UnknownOp, UnboundVariable, InvalidProgram };

    ParseError(Kind kind, std::string detail, int line = 0)
        : Error(std::string(kindName(kind)) + (line > 0 ? " at line " + std::to_string(line) : std::string()) + ": " +
                detail),
          kind_(kind), detail_(std::move(detail)), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }
    int line() const noexcept { return line_; }

    static std::string_view kindName(Kind k) {
        switch (k) {
            case Kind::EmptyCommand: return "EmptyCommand";
            case Kind::UnrecognizedVerb: return "UnrecognizedVerb";
            case Kind::AmbiguousDirection: return "AmbiguousDirection";
            case Kind::SyntaxError: return "SyntaxError";
            case Kind::UnknownOp: return "UnknownOp";
            case Kind::UnboundVariable: return "UnboundVariable";
            case Kind::InvalidProgram: return "InvalidProgram";
        }
        return "ParseError";
    }

private:
    Kind kind_;
    std::string detail_;
    int line_;
};

inline std::string objName(std::size_t k) { return "OBJ" + std::to_string(k); }

/// Checks the structural invariants: at least one operation, a single
/// terminal RESULT, MASK consumed first, each step consuming its
/// predecessor's output, unique output names.
inline void validateProgram(const Program& p) {
    using K = ParseError::Kind;
    if (p.steps.size() < 2) throw ParseError(K::InvalidProgram, "program needs at least one operation and RESULT");
    if (p.steps.back().op != OpKind::Result) throw ParseError(K::InvalidProgram, "last step must be RESULT");
    std::set<std::string> outs;
    std::string prev = "MASK";
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const Step& s = p.steps[i];
        if (s.op == OpKind::Result && i + 1 != p.steps.size())
            throw ParseError(K::InvalidProgram, "RESULT may only appear as the last step");
        if (s.inVar != prev)
            throw ParseError(K::InvalidProgram, "step " + std::to_string(i) + " consumes '" + s.inVar + "', expected '" + prev + "'");
        if (s.outVar.empty() || s.outVar == "MASK" || !outs.insert(s.outVar).second)
            throw ParseError(K::InvalidProgram, "output variable '" + s.outVar + "' is reserved or duplicated");
        auto allowed = overrideKeys(s.op);
        for (const auto& [key, value] : s.overrides)
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw ParseError(K::InvalidProgram, "override '" + key + "' not accepted by " + std::string(opName(s.op)));
        prev = s.outVar;
    }
}

/// Builds a chained program OBJ0..OBJn-1 + RESULT from (op, direction) pairs.
inline Program makeProgram(const std::vector<std::pair<OpKind, Direction>>& ops) {
    Program p;
    std::string prev = "MASK";
    for (std::size_t k = 0; k < ops.size(); ++k) {
        p.steps.push_back(Step{ops[k].first, ops[k].second, prev, objName(k), {}});
        prev = objName(k);
    }
    p.steps.push_back(Step{OpKind::Result, Direction::Overall, prev, "FINAL", {}});
    return p;
}

// ---------------------------------------------------------------------------
// Command grammar

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::optional<OpKind> verbOf(std::string_view w) {
    static const std::map<std::string_view, OpKind> kVerbs = {
        {"expand", OpKind::Expand},         {"expands", OpKind::Expand},        {"grow", OpKind::Expand},
        {"enlarge", OpKind::Expand},        {"extend", OpKind::Expand},         {"shrink", OpKind::Shrink},
        {"shrinks", OpKind::Shrink},        {"contract", OpKind::Shrink},       {"reduce", OpKind::Shrink},
        {"remove", OpKind::Remove},         {"delete", OpKind::Remove},         {"erase", OpKind::Remove},
        {"eliminate", OpKind::Remove},      {"fill", OpKind::Fill},             {"smooth", OpKind::Smooth},
        {"smoothen", OpKind::Smooth},       {"foreground", OpKind::Foreground}, {"background", OpKind::Background},
    };
    auto it = kVerbs.find(w);
    if (it == kVerbs.end()) return std::nullopt;
    return it->second;
}

enum class Axis { None, Vertical, Horizontal, Whole };

struct DirWord {
    Axis axis;
    int sign;  // vertical: -1 top, +1 bottom; horizontal: -1 left, +1 right
};

inline std::optional<DirWord> directionWord(std::string_view w) {
    static const std::map<std::string_view, DirWord> kWords = {
        {"top", {Axis::Vertical, -1}},       {"up", {Axis::Vertical, -1}},
        {"upper", {Axis::Vertical, -1}},     {"upward", {Axis::Vertical, -1}},
        {"upwards", {Axis::Vertical, -1}},   {"above", {Axis::Vertical, -1}},
        {"bottom", {Axis::Vertical, 1}},     {"down", {Axis::Vertical, 1}},
        {"lower", {Axis::Vertical, 1}},      {"downward", {Axis::Vertical, 1}},
        {"downwards", {Axis::Vertical, 1}},  {"below", {Axis::Vertical, 1}},
        {"left", {Axis::Horizontal, -1}},    {"leftward", {Axis::Horizontal, -1}},
        {"leftwards", {Axis::Horizontal, -1}}, {"right", {Axis::Horizontal, 1}},
        {"rightward", {Axis::Horizontal, 1}}, {"rightwards", {Axis::Horizontal, 1}},
        {"overall", {Axis::Whole, 0}},       {"entire", {Axis::Whole, 0}},
        {"whole", {Axis::Whole, 0}},         {"everywhere", {Axis::Whole, 0}},
    };
    auto it = kWords.find(w);
    if (it == kWords.end()) return std::nullopt;
    return it->second;
}

inline Direction combine(int vertical, int horizontal) {
    if (vertical < 0 && horizontal < 0) return Direction::TopLeft;
    if (vertical < 0 && horizontal > 0) return Direction::TopRight;
    if (vertical > 0 && horizontal < 0) return Direction::BottomLeft;
    if (vertical > 0 && horizontal > 0) return Direction::BottomRight;
    if (vertical < 0) return Direction::Top;
    if (vertical > 0) return Direction::Bottom;
    if (horizontal < 0) return Direction::Left;
    if (horizontal > 0) return Direction::Right;
    return Direction::Overall;
}

/// Splits on , ; . ! ? and on the words "and"/"then"; lower-cases; turns
/// hyphens and other punctuation into word breaks.
inline std::vector<std::vector<std::string>> clauses(std::string_view text) {
    std::vector<std::vector<std::string>> out(1);
    std::string word;
    auto flushWord = [&] {
        if (word.empty()) return;
        if (word == "and" || word == "then") {
            out.emplace_back();
        } else {
            out.back().push_back(word);
        }
        word.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else if (ch == '\'') {
            // contractions stay one token ("region's" -> "regions")
        } else if (ch == ',' || ch == ';' || ch == '.' || ch == '!' || ch == '?' || ch == '\n') {
            flushWord();
            out.emplace_back();
        } else {
            flushWord();
        }
    }
    flushWord();
    std::erase_if(out, [](const auto& c) { return c.empty(); });
    return out;
}

inline std::string joinWords(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

} // namespace detail

/// Compiles one clause worth of words into an (op, direction) pair.
inline std::pair<OpKind, Direction> parseClause(const std::vector<std::string>& words) {
    using K = ParseError::Kind;
    std::optional<OpKind> verb;
    std::size_t verbAt = 0;
    for (std::size_t i = 0; i < words.size() && !verb; ++i)
        if (auto v = detail::verbOf(words[i])) {
            verb = v;
            verbAt = i;
        }
    if (!verb) throw ParseError(K::UnrecognizedVerb, "no operation recognized in clause '" + detail::joinWords(words) + "'");

    int vertical = 0, horizontal = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i == verbAt) continue;
        // "fill up the holes": the particle is not a direction
        if (*verb == OpKind::Fill && i == verbAt + 1 && words[i] == "up") continue;
        auto d = detail::directionWord(words[i]);
        if (!d || d->axis == detail::Axis::Whole) continue;
        int& slot = d->axis == detail::Axis::Vertical ? vertical : horizontal;
        if (slot != 0 && slot != d->sign)
            throw ParseError(K::AmbiguousDirection, "conflicting directions in clause '" + detail::joinWords(words) + "'");
        slot = d->sign;
    }
    return {*verb, detail::combine(vertical, horizontal)};
}

/// Translates a command into a program: one step per clause, in order,
/// followed by RESULT. Clauses without a direction apply to the whole roi.
inline Program parseCommand(std::string_view command) {
    auto cls = detail::clauses(command);
    if (cls.empty()) throw ParseError(ParseError::Kind::EmptyCommand, "command contains no words");
    std::vector<std::pair<OpKind, Direction>> ops;
    ops.reserve(cls.size());
    for (const auto& c : cls) ops.push_back(parseClause(c));
    return makeProgram(ops);
}

/// Program source. The default implementation is the deterministic grammar
/// above; an adapter for an external language model would implement the
/// same interface.
class ProgramGenerator {
public:
    virtual ~ProgramGenerator() = default;
    virtual Program generate(std::string_view command) const = 0;
};

class GrammarProgramGenerator : public ProgramGenerator {
public:
    Program generate(std::string_view command) const override { return parseCommand(command); }
};

// ---------------------------------------------------------------------------
// Program text

inline std::string formatNumber(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string renderStep(const Step& s) {
    if (s.op == OpKind::Result) return s.outVar + "=RESULT(var=" + s.inVar + ")";
    std::string line = s.outVar + "=" + std::string(opName(s.op)) + "(direction='" +
                       std::string(directionName(s.direction)) + "', in=" + s.inVar;
    for (const auto& [key, value] : s.overrides) line += ", " + key + "=" + formatNumber(value);
    return line + ")";
}

/// One LF-terminated line per step.
inline std::string renderProgram(const Program& p) {
    validateProgram(p);
    std::string out;
    for (const auto& s : p.steps) out += renderStep(s) + "\n";
    return out;
}

namespace detail {

class LineScanner {
public:
    LineScanner(std::string_view s, int line) : s_(s), line_(line) {}

    void skipSpace() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    bool atEnd() {
        skipSpace();
        return pos_ >= s_.size();
    }
    bool accept(char c) {
        skipSpace();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    std::string ident() {
        skipSpace();
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
            ++pos_;
        if (start == pos_) fail("expected identifier");
        return std::string(s_.substr(start, pos_ - start));
    }
    std::string quoted() {
        skipSpace();
        if (pos_ >= s_.size() || (s_[pos_] != '\'' && s_[pos_] != '"')) fail("expected quoted string");
        char q = s_[pos_++];
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != q) ++pos_;
        if (pos_ >= s_.size()) fail("unterminated string");
        return std::string(s_.substr(start, pos_++ - start));
    }
    double number() {
        skipSpace();
        double v = 0.0;
        auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
        if (res.ec != std::errc{}) fail("expected number");
        pos_ = static_cast<std::size_t>(res.ptr - s_.data());
        return v;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(ParseError::Kind::SyntaxError, what + " at column " + std::to_string(pos_ + 1), line_);
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
};

} // namespace detail

/// Inverse of renderProgram. Blank lines and lines starting with '#' are
/// ignored.
inline Program parseProgram(std::string_view text) {
    using K = ParseError::Kind;
    Program p;
    std::set<std::string> bound{"MASK"};
    int lineNo = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineNo;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == text.size()) break;
            continue;
        }
        detail::LineScanner sc(line, lineNo);
        Step s;
        s.outVar = sc.ident();
        sc.expect('=');
        std::string opText = sc.ident();
        auto op = opFromName(opText);
        if (!op) throw ParseError(K::UnknownOp, "unknown operation '" + opText + "'", lineNo);
        s.op = *op;
        sc.expect('(');
        bool haveIn = false, haveDir = false;
        if (!sc.accept(')')) {
            do {
                std::string key = sc.ident();
                sc.expect('=');
                if (key == "direction") {
                    auto d = directionFromName(sc.quoted());
                    if (!d) sc.fail("unknown direction");
                    s.direction = *d;
                    haveDir = true;
                } else if (key == "in" || key == "var") {
                    if ((key == "var") != (s.op == OpKind::Result)) sc.fail("argument '" + key + "' not valid here");
                    s.inVar = sc.ident();
                    if (!bound.count(s.inVar))
                        throw ParseError(K::UnboundVariable, "variable '" + s.inVar + "' used before definition", lineNo);
                    haveIn = true;
                } else {
                    auto allowed = overrideKeys(s.op);
                    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                        sc.fail("argument '" + key + "' not accepted by " + opText);
                    s.overrides[key] = sc.number();
                }
            } while (sc.accept(','));
            sc.expect(')');
        }
        if (!sc.atEnd()) sc.fail("trailing characters");
        if (!haveIn) sc.fail("missing input variable");
        if (s.op != OpKind::Result && !haveDir) sc.fail("missing direction");
        bound.insert(s.outVar);
        p.steps.push_back(std::move(s));
        if (end == text.size()) break;
    }
    validateProgram(p);
    return p;
}

} // namespace langseg
