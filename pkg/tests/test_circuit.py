import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from abqt.circuit import (CircuitProgram, MAX_DEPTH, evaluate_circuit, evaluate_expr, format_circuit,
                          parse_circuit)
from abqt.errors import CircuitSyntaxError
from abqt.measurement import OutcomeClass

EXAMPLE = "MODES 2\nSTATE 0 1 = 1.0 |a,a> + 1.0 |-a,-a>\nBPS 0 1"


def error_of(text):
    with pytest.raises(CircuitSyntaxError) as info:
        parse_circuit(text)
    return info.value


class TestParse:
    def test_example_program(self):
        prog = parse_circuit(EXAMPLE)
        assert isinstance(prog, CircuitProgram)
        assert [s.keyword for s in prog.statements] == ["MODES", "STATE", "BPS"]
        assert prog.mode_count == 2

    def test_undeclared_mode(self):
        err = error_of("MODES 2\nBPS 0 7")
        assert err.line == 2 and err.column == 7
        assert "undeclared" in err.message

    def test_unknown_keyword(self):
        err = error_of("MODES 1\nFOO 1")
        assert (err.line, err.column) == (2, 1)

    def test_arity(self):
        assert error_of("MODES 2\nBPS 0").line == 2
        assert "labels" in error_of("MODES 2\nSTATE 0 1 = |a>").message

    def test_modes_first_and_once(self):
        assert error_of("BPS 0 1").line == 1
        assert error_of("MODES 1\nMODES 1").line == 2

    def test_measured_mode_is_gone(self):
        assert error_of("MODES 2\nMEASURE 0 ODD\nBPS 0 1").line == 3

    def test_target_must_list_survivors(self):
        err = error_of("MODES 2\nMEASURE 0 ODD\nTARGET 0 1 = |a, a>")
        assert err.line == 3

    def test_measure_classes(self):
        prog = parse_circuit("MODES 1\nMEASURE 0 EVEN")
        assert prog.statements[1].args[1] is OutcomeClass.EVEN_NONZERO

    def test_comments_and_blank_lines(self):
        prog = parse_circuit("\n# header\nMODES 1   # one mode\n\nPHASE 0 pi/2\n")
        assert len(prog.statements) == 2

    def test_invalid_utf8(self):
        err = error_of(b"MODES 1\n\xff\xfe")
        assert err.line >= 1

    def test_nesting_limit(self):
        deep = "MODES 1\nPHASE 0 " + "(" * (MAX_DEPTH + 5) + "1" + ")" * (MAX_DEPTH + 5)
        assert error_of(deep).line == 2

    def test_expressions(self):
        assert evaluate_expr(parse_circuit("MODES 1\nPHASE 0 2pi/4").statements[1].args[1]) == pytest.approx(math.pi / 2)
        disp = parse_circuit("MODES 1\nDISP 0 1 -2").statements[1]
        assert evaluate_expr(disp.args[1]) == 1 and evaluate_expr(disp.args[2]) == -2
        assert evaluate_expr(parse_circuit("MODES 1\nPHASE 0 a*a").statements[1].args[1], alpha=3) == 9


class TestEvaluate:
    def test_beam_split_cat_heralds_target(self):
        src = ("MODES 3\nSTATE 0 1 = |a,a> + |-a,-a>\nSTATE 2 = |a>\nBPS 0 2\n"
               "MEASURE 0 ODD\nTARGET 1 2 = |a, 0>\n")
        res = evaluate_circuit(parse_circuit(src), alpha=1.0)
        assert res.modes == (1, 2)
        assert res.target_fidelity == pytest.approx(1)
        assert 0 < res.probability < 1

    def test_unprepared_modes_start_in_vacuum(self):
        res = evaluate_circuit(parse_circuit("MODES 2\nSTATE 0 = |a>\nBPS 0 1\nTARGET 0 1 = |0.7071067811865476a, 0.7071067811865476a>"), 2.0)
        assert res.target_fidelity == pytest.approx(1)


# ---- totality fuzz ---------------------------------------------------------

FRAGMENTS = ["MODES", "STATE", "BPS", "PHASE", "DISP", "MEASURE", "TARGET", "ODD", "EVEN", "ZERO",
             "0", "1", "2", "7", "99999999999", "-", "+", "*", "/", "(", ")", "|", ">", "<", ",", "=",
             "a", "pi", "j", "2a", "0.5", "1e308", "1e-400", "#", "\n", " ", "\t", "é", "\x00", "|a,-a>"]


def fuzz_inputs(n, seed=7):
    rnd = random.Random(seed)
    base = EXAMPLE + "\nPHASE 1 pi/2\nDISP 0 (pi/2) -1\nMEASURE 0 ODD\nTARGET 1 = |a>\n"
    for k in range(n):
        kind = k % 3
        if kind == 0:
            yield bytes(rnd.randrange(256) for _ in range(rnd.randrange(60)))
        elif kind == 1:
            yield " ".join(rnd.choice(FRAGMENTS) for _ in range(rnd.randrange(30)))
        else:
            chars = list(base)
            for _ in range(rnd.randrange(1, 6)):
                pos = rnd.randrange(len(chars))
                op = rnd.randrange(3)
                if op == 0:
                    del chars[pos]
                elif op == 1:
                    chars.insert(pos, rnd.choice(FRAGMENTS))
                else:
                    chars[pos] = rnd.choice("()|<>=,+-*/ \n0123456789ajp")
            yield "".join(chars)


def test_parser_totality_fuzz():
    violations = []
    count = 0
    for text in fuzz_inputs(10_000):
        count += 1
        try:
            prog = parse_circuit(text)
            assert parse_circuit(format_circuit(prog)) == prog
        except CircuitSyntaxError as exc:
            if not (isinstance(exc.line, int) and exc.line >= 1 and isinstance(exc.column, int) and exc.column >= 1):
                violations.append((text, "bad location"))
        except Exception as exc:  # any other exception is a totality violation
            violations.append((text, repr(exc)))
    assert count == 10_000
    assert violations == []


# ---- round trip ------------------------------------------------------------

scalar = st.one_of(
    st.integers(0, 20).map(str),
    st.sampled_from(["a", "pi", "j", "2a", "0.5", "pi/2", "(1 + 2j)", "a*a", "-a", "3/4", "1.5e-3"]),
)


@st.composite
def programs(draw):
    n = draw(st.integers(1, 4))
    lines = [f"MODES {n}"]
    k = draw(st.integers(1, n))
    modes = " ".join(str(m) for m in range(k))
    terms = []
    for i in range(draw(st.integers(1, 3))):
        labels = ", ".join(draw(scalar) for _ in range(k))
        coeff = draw(st.one_of(st.just(""), scalar.map(lambda s: s + " ")))
        sign = "" if i == 0 else draw(st.sampled_from([" + ", " - "]))
        terms.append(f"{sign}{coeff}|{labels}>")
    lines.append(f"STATE {modes} = {''.join(terms)}")
    live = list(range(n))
    for _ in range(draw(st.integers(0, 5))):
        gate = draw(st.sampled_from(["BPS", "PHASE", "DISP", "MEASURE"]))
        if gate == "BPS" and len(live) >= 2:
            i, j = draw(st.permutations(live))[:2]
            lines.append(f"BPS {i} {j}")
        elif gate == "PHASE":
            lines.append(f"PHASE {draw(st.sampled_from(live))} {draw(scalar)}")
        elif gate == "DISP":
            # compound DISP scalars must be parenthesized
            lines.append(f"DISP {draw(st.sampled_from(live))} ({draw(scalar)}) ({draw(scalar)})")
        elif gate == "MEASURE" and len(live) >= 2:
            m = draw(st.sampled_from(live))
            live.remove(m)
            lines.append(f"MEASURE {m} {draw(st.sampled_from(['ZERO', 'EVEN', 'ODD']))}")
    if draw(st.booleans()):
        labels = ", ".join("a" for _ in live)
        lines.append(f"TARGET {' '.join(map(str, live))} = |{labels}>")
    return "\n".join(lines)


@settings(max_examples=200)
@given(programs())
def test_round_trip(text):
    prog = parse_circuit(text)
    printed = format_circuit(prog)
    assert parse_circuit(printed) == prog
    assert format_circuit(parse_circuit(printed)) == printed
