"""Reserved-word registry for the supported languages.

Used by lexical feature extraction; each list is sorted so feature layouts
are stable across runs.
"""

from __future__ import annotations

_C = (
    "auto break case char const continue default do double else enum extern float for "
    "goto if inline int long register restrict return short signed sizeof static struct "
    "switch typedef union unsigned void volatile while"
)

_CPP_EXTRA = (
    "bool catch class constexpr const_cast delete dynamic_cast explicit false friend "
    "mutable namespace new noexcept nullptr operator private protected public "
    "reinterpret_cast static_cast template this throw true try typeid typename using virtual"
)

KEYWORDS: dict[str, tuple[str, ...]] = {
    "C": tuple(sorted(_C.split())),
    "C++": tuple(sorted(set(_C.split()) | set(_CPP_EXTRA.split()))),
    "C#": tuple(sorted(
        "abstract as base bool break byte case catch char checked class const continue "
        "decimal default delegate do double else enum event explicit extern false finally "
        "fixed float for foreach goto if implicit in int interface internal is lock long "
        "namespace new null object operator out override params private protected public "
        "readonly ref return sbyte sealed short sizeof stackalloc static string struct "
        "switch this throw true try typeof uint ulong unchecked unsafe ushort using var "
        "virtual void volatile while".split()
    )),
    "Go": tuple(sorted(
        "break case chan const continue default defer else fallthrough for func go goto "
        "if import interface map package range return select struct switch type var".split()
    )),
    "Java": tuple(sorted(
        "abstract assert boolean break byte case catch char class const continue default "
        "do double else enum extends final finally float for goto if implements import "
        "instanceof int interface long native new package private protected public return "
        "short static strictfp super switch synchronized this throw throws transient try "
        "void volatile while".split()
    )),
    "JavaScript": tuple(sorted(
        "async await break case catch class const continue debugger default delete do "
        "else export extends finally for function if import in instanceof let new of "
        "return static super switch this throw try typeof var void while with yield".split()
    )),
    "Kotlin": tuple(sorted(
        "abstract as break by catch class companion const constructor continue data do "
        "else enum false final finally for fun get if import in init interface internal "
        "is lateinit null object open operator out override package private protected "
        "public return sealed set super suspend this throw true try typealias val var "
        "vararg when where while".split()
    )),
    "Python": tuple(sorted(
        "False None True and as assert async await break class continue def del elif "
        "else except finally for from global if import in is lambda nonlocal not or "
        "pass raise return try while with yield".split()
    )),
    "Ruby": tuple(sorted(
        "alias and begin break case class def do else elsif end ensure false for if in "
        "module next nil not or redo rescue retry return self super then true undef "
        "unless until when while yield".split()
    )),
    "Rust": tuple(sorted(
        "as async await break const continue crate dyn else enum extern false fn for if "
        "impl in let loop match mod move mut pub ref return self static struct super "
        "trait true type unsafe use where while".split()
    )),
}
