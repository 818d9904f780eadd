"""Command-line surface: scenario runner, registry listing, class arithmetic.

    loopchern list
    loopchern verify --scenario <name> [--config file.json] [--tol t]
                     [--grid N] [--out report.json]
    loopchern lk eval "<expression>"

Expressions combine class literals with +, -, *, `tokhat` and `imap <k>`.
A class literal is a bracketed list whose elements are either exact pairs
"(p/q, r/s turns)" (meaning p/q + 2 pi i r/s) or floating complex numbers
written like "0.5+1.25i".
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction

from .circle_k import (
    EXACT,
    KHatElement,
    LKElement,
    SpectralClass,
    lk_add,
    lk_i_map,
    lk_mul,
    lk_neg,
    to_khat,
)
from .errors import EngineError, ExpressionParseError, ScenarioLookupError
from .scenarios import ScenarioConfig, list_scenarios, run_scenario

_TOKEN_RE = re.compile(r"""
    (?P<class>\[[^\[\]]*\]) |
    (?P<name>[A-Za-z_]+) |
    (?P<int>-?\d+) |
    (?P<op>[+\-*()])
    """, re.VERBOSE)

_EXACT_RE = re.compile(
    r"^\(\s*(-?\d+(?:/\d+)?)\s*,\s*(-?\d+(?:/\d+)?)\s*turns\s*\)$")


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _parse_class(text: str) -> LKElement:
    body = text[1:-1].strip()
    if not body:
        raise ExpressionParseError(
            "an empty class literal is ambiguous; write [(0, 0 turns)] - [(0, 0 turns)] "
            "for zero")
    exact_logs, float_logs = [], []
    for elem in _split_top_level(body):
        m = _EXACT_RE.match(elem)
        if m:
            exact_logs.append((Fraction(m.group(1)), Fraction(m.group(2))))
            continue
        try:
            float_logs.append(complex(elem.replace(" ", "").replace("i", "j")))
        except ValueError:
            raise ExpressionParseError(f"cannot parse class element {elem!r}") from None
    if exact_logs and float_logs:
        raise ExpressionParseError("cannot mix exact pairs and float values in one class")
    cls = SpectralClass.exact(exact_logs) if exact_logs else SpectralClass.floats(float_logs)
    return LKElement.from_class(cls)


class _Parser:
    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        for m in _TOKEN_RE.finditer(text):
            if text[pos:m.start()].strip():
                raise ExpressionParseError(
                    f"unexpected input {text[pos:m.start()].strip()!r}")
            pos = m.end()
            kind = m.lastgroup
            self.tokens.append((kind, m.group()))
        if text[pos:].strip():
            raise ExpressionParseError(f"unexpected trailing input {text[pos:].strip()!r}")
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, tok = self.next()
        if tok != value:
            raise ExpressionParseError(f"expected {value!r}, found {tok!r}")

    def parse(self):
        value = self.expr()
        if self.peek()[0] is not None:
            raise ExpressionParseError(f"unexpected token {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            value = _binop(op, value, rhs)
        return value

    def term(self):
        value = self.factor()
        while self.peek()[1] == "*":
            self.next()
            value = _binop("*", value, self.factor())
        return value

    def factor(self):
        kind, tok = self.peek()
        if tok == "tokhat":
            self.next()
            inner = self.factor()
            if not isinstance(inner, LKElement):
                raise ExpressionParseError("tokhat applies to class differences")
            return to_khat(inner)
        if tok == "imap":
            self.next()
            k_kind, k_tok = self.next()
            if k_kind != "int":
                raise ExpressionParseError("imap needs an integer winding")
            inner = self.factor()
            if not isinstance(inner, LKElement):
                raise ExpressionParseError("imap applies to class differences")
            return lk_i_map(inner, int(k_tok))
        if kind == "class":
            self.next()
            return _parse_class(tok)
        if tok == "(":
            self.next()
            value = self.expr()
            self.expect(")")
            return value
        if kind == "int":
            self.next()
            return complex(int(tok))
        raise ExpressionParseError(f"unexpected token {tok!r}")


def _binop(op: str, a, b):
    if isinstance(a, LKElement) and isinstance(b, LKElement):
        if op == "+":
            return lk_add(a, b)
        if op == "-":
            return lk_add(a, lk_neg(b))
        return lk_mul(a, b)
    if isinstance(a, KHatElement) and isinstance(b, KHatElement):
        if op == "+":
            return a.add(b)
        if op == "-":
            return a.add(_khat_neg(b))
        return a.mul(b)
    if isinstance(a, complex) and isinstance(b, complex):
        return {"+": a + b, "-": a - b, "*": a * b}[op]
    raise ExpressionParseError(
        f"cannot apply {op!r} to {type(a).__name__} and {type(b).__name__}")


def _khat_neg(k: KHatElement) -> KHatElement:
    if k.mode == EXACT:
        det = (-k.det_part[0], (-k.det_part[1]) % 1)
    else:
        det = complex(-k.det_part.real, (-k.det_part.imag) % (2 * 3.141592653589793))
    return KHatElement(k.mode, -k.rank_part, det, k.tol)


def eval_lk_expression(text: str):
    return _Parser(text).parse()


def _fmt_log(log, mode: str) -> str:
    if mode == EXACT:
        return f"({log[0]}, {log[1]} turns)"
    return f"{log.real:.12g}{log.imag:+.12g}i"


def _fmt_class(cls: SpectralClass) -> str:
    return "[" + ", ".join(_fmt_log(l, cls.mode) for l in cls.logs) + "]"


def format_value(value) -> str:
    if isinstance(value, LKElement):
        if value.is_zero():
            return "0"
        parts = []
        if value.plus.rank:
            parts.append(_fmt_class(value.plus))
        if value.minus.rank:
            parts.append("- " + _fmt_class(value.minus))
        return " ".join(parts) if parts else "0"
    if isinstance(value, KHatElement):
        return f"(rank {value.rank_part}, det {_fmt_log(value.det_part, value.mode)})"
    return f"{value.real:.12g}{value.imag:+.12g}i"


def _cmd_list(_args) -> int:
    for name, desc in list_scenarios():
        print(f"{name:26s} {desc}")
    return 0


def _cmd_verify(args) -> int:
    try:
        if args.config:
            cfg = ScenarioConfig.from_file(args.config)
            if args.scenario and cfg.name != args.scenario:
                print(f"error: config is for scenario {cfg.name!r}, "
                      f"not {args.scenario!r}", file=sys.stderr)
                return 2
        else:
            cfg = ScenarioConfig(args.scenario, {})
        if args.tol is not None:
            cfg.params["tol"] = args.tol
        if args.grid is not None:
            cfg.params["grid"] = args.grid
        report = run_scenario(cfg)
    except json.JSONDecodeError as exc:
        print(f"error: malformed config JSON at line {exc.lineno}, column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        return 2
    except (ScenarioLookupError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        mark = "pass" if check.passed else "FAIL"
        line = f"[{mark}] {check.identity}: defect={check.defect:.3e} tol={check.tol:.1e}"
        if check.note:
            line += f"  ({check.note})"
        print(line)
    out = args.out or f"{report.scenario}.report.json"
    report.write(out)
    print(f"{'PASS' if report.passed else 'FAIL'} {report.scenario} "
          f"in {report.timing_seconds:.2f}s -> {out}")
    return 0 if report.passed else 1


def _cmd_lk(args) -> int:
    if args.action != "eval":
        print("error: the lk subcommand supports only 'eval'", file=sys.stderr)
        return 2
    try:
        value = eval_lk_expression(args.expression)
    except ExpressionParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(format_value(value))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopchern",
        description="verification runs for holonomy-based loop-space forms "
                    "and circle spectral classes")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered scenarios")

    verify = sub.add_parser("verify", help="run one scenario and write its report")
    verify.add_argument("--scenario", help="registry name (see 'list')")
    verify.add_argument("--config", help="JSON config overriding the packaged defaults")
    verify.add_argument("--tol", type=float, help="override every tolerance in the run")
    verify.add_argument("--grid", type=int, help="override the main grid size")
    verify.add_argument("--out", help="report path (default <scenario>.report.json)")

    lk = sub.add_parser("lk", help="spectral-class arithmetic")
    lk.add_argument("action", choices=["eval"])
    lk.add_argument("expression")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list(args)
    if args.command == "verify":
        if not args.scenario and not args.config:
            print("error: verify needs --scenario or --config", file=sys.stderr)
            return 2
        return _cmd_verify(args)
    return _cmd_lk(args)


if __name__ == "__main__":
    sys.exit(main())
