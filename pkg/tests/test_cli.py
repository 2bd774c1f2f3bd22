import io
import os
import subprocess
import sys
from pathlib import Path

import pytest

from overground.cli import Server, main

DATA = Path(__file__).parent / "data"
P0 = str(DATA / "p0.lp")
F = [str(DATA / f"f{i}.lp") for i in (1, 2, 3)]


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_ground_first_facts():
    code, out, _ = run("ground", P0, F[0])
    assert code == 0
    assert out == ("r(a,b) :- e(a,b), not ab(a).\n"
                   "r(c,a) :- e(c,a), not ab(c).\n"
                   "r(c,b) | s(c,b) :- e(c,a), r(a,b).\n"
                   "% rules: 3\n")


def test_ground_accumulates_files():
    code, out, _ = run("ground", P0, F[0], F[1])
    assert code == 0 and out.endswith("% rules: 5\n")


def test_ground_no_facts():
    assert run("ground", P0) == (0, "% rules: 0\n", "")


def test_ground_emit(tmp_path):
    target = tmp_path / "g.lp"
    code, out, _ = run("ground", P0, F[0], "--emit", str(target))
    assert out == "% rules: 3\n"
    assert len(target.read_text().splitlines()) == 3


def test_shots_csv(tmp_path):
    stats = tmp_path / "s.csv"
    code, out, _ = run("shots", P0, *F, "--stats", str(stats), "--no-timing")
    assert code == 0 and out == ""
    rows = [line.split(",") for line in stats.read_text().splitlines()[1:]]
    assert [int(r[2]) for r in rows] == [3, 2, 0]


def test_shots_repeated_file():
    code, out, _ = run("shots", P0, F[0], F[0], F[0], "--no-timing")
    assert [line.split(",")[2] for line in out.splitlines()[1:]] == ["3", "0", "0"]


def test_solve():
    code, out, _ = run("solve", P0, F[0])
    assert out.splitlines() == ["{e(a,b), e(c,a), r(a,b), r(c,a), r(c,b)}",
                                "{e(a,b), e(c,a), r(a,b), r(c,a), s(c,b)}"]
    code, out, _ = run("solve", P0, F[0], "-n", "1")
    assert len(out.splitlines()) == 1


def test_solve_unsat(tmp_path):
    prog = tmp_path / "p.lp"
    prog.write_text("a :- not a.")
    assert run("solve", str(prog)) == (0, "UNSATISFIABLE\n", "")


def test_check_embedding(tmp_path):
    facts = DATA / "fab.lp"
    good = tmp_path / "e1.lp"
    good.write_text("r(a,b) :- e(a,b), not ab(a).\nr(b,b) :- e(b,b), not ab(b).\n"
                    "r(a,b) | s(a,b) :- e(a,b), r(b,b).\nr(b,b) | s(b,b) :- e(b,a), r(a,b).\n"
                    "r(b,b) | s(b,b) :- e(b,b), r(b,b).\ne(a,b).\ne(b,b).\n")
    assert run("check-embedding", P0, str(facts), str(good))[1] == "EMBEDDING\n"
    bad = tmp_path / "e2.lp"
    bad.write_text("r(b,b) :- e(b,b), not ab(b).\nr(a,b) | s(a,b) :- e(a,b), r(b,b).\n"
                   "r(b,b) | s(b,b) :- e(b,b), r(b,b).\ne(a,b).\ne(b,b).\n")
    assert run("check-embedding", P0, str(facts), str(bad))[1] == \
        "NOT-EMBEDDING r(a,b) :- e(a,b), not ab(a).\n"
    alien = tmp_path / "x.lp"
    alien.write_text("e(c,c).\n")
    assert run("check-embedding", P0, str(facts), str(alien))[0] == 2


def test_exit_codes(tmp_path, capsys):
    unsafe = tmp_path / "u.lp"
    unsafe.write_text("p(X) :- not q(X).")
    code, _, err = run("ground", str(unsafe))
    assert code == 2 and "X" in err
    broken = tmp_path / "b.lp"
    broken.write_text("p(a :- q.")
    assert run("ground", str(broken))[0] == 2
    assert run("ground", P0, F[0], "--max-instances", "1")[0] == 3
    assert run("ground", str(tmp_path / "missing.lp"))[0] == 1
    with pytest.raises(SystemExit) as e:
        run("frobnicate")
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run("shots", P0)
    assert e.value.code == 1


def test_solver_cap_exit(tmp_path):
    prog = tmp_path / "p.lp"
    prog.write_text("p(X) | q(X) :- d(X).")
    facts = tmp_path / "f.lp"
    facts.write_text(" ".join(f"d({i})." for i in range(10)))
    assert run("solve", str(prog), str(facts), "--solver-cap", "5")[0] == 3


# -- serve ---------------------------------------------------------------------------

def serve(script, **kw):
    out = io.StringIO()
    Server(out, timing=False, **kw).run(io.StringIO(script))
    return out.getvalue()


def test_serve_basic():
    got = serve(f"LOAD {P0}\nSHOT {F[0]}\nSOLVE\nQUIT\n")
    assert got.splitlines() == [
        "OK", "OK delta=3 total=3",
        "{e(a,b), e(c,a), r(a,b), r(c,a), r(c,b)}",
        "{e(a,b), e(c,a), r(a,b), r(c,a), s(c,b)}",
        "OK models=2", "OK bye",
    ]


def test_serve_errors_do_not_stop_the_loop():
    script = "SOLVE\nFOO bar\nSHOT /nonexistent\nLOAD\nSOLVE x\n" \
             f"LOAD {P0}\nSTATS\nSHOT-INLINE\ne(X).\nEND\nSHOT-INLINE\ne(a,b).\nEND\nSOLVE 1\nQUIT\n"
    lines = serve(script).splitlines()
    assert lines[0] == "ERROR no program loaded"
    assert lines[1].startswith("ERROR unknown command")
    assert all(line.startswith("ERROR") for line in lines[2:5])
    assert lines[5] == "OK"
    assert lines[6] == "ERROR no shot submitted"
    assert lines[7].startswith("ERROR")
    assert lines[8] == "OK delta=1 total=1"
    assert lines[-1] == "OK bye"


def test_serve_emit_stats_reset(tmp_path):
    target = tmp_path / "g.lp"
    got = serve(f"LOAD {P0}\nSHOT {F[0]}\nSHOT {F[1]}\nEMIT {target}\nSTATS\nRESET\nSTATS\n")
    lines = got.splitlines()
    assert "OK rules=5" in lines
    assert "shot,new_facts,delta_rules,total_rules,ground_time_us,solve_time_us" in lines
    assert lines[-1] == "ERROR no program loaded"
    assert len(target.read_text().splitlines()) == 5


def test_serve_unterminated_inline():
    got = serve(f"LOAD {P0}\nSHOT-INLINE\ne(a,b).\n")
    assert got.splitlines()[-1].startswith("ERROR")


def test_serve_survives_garbage():
    import random
    rng = random.Random(7)
    verbs = ["LOAD", "SHOT", "SOLVE", "EMIT", "STATS", "RESET", "SHOT-INLINE", "END", "x", ""]
    for _ in range(30):
        lines = [f"{rng.choice(verbs)} {rng.choice(['', P0, F[0], '-1', 'a b', '/'])}"
                 for _ in range(rng.randint(1, 12))]
        out = serve("\n".join(lines) + "\n")
        for line in out.splitlines():
            assert line
        assert "internal" not in out


def test_serve_subprocess_transcript(tmp_path):
    script = (DATA / "session.txt").read_text()
    env = dict(os.environ, PYTHONPATH=str(Path(__file__).parents[1] / "src"))

    def once():
        return subprocess.run([sys.executable, "-m", "overground.cli", "serve", "--no-timing"],
                              input=script, capture_output=True, text=True, cwd=DATA.parent.parent,
                              env=env, check=True).stdout

    first, second = once(), once()
    assert first == second
    assert first == (DATA / "session.expected").read_text()


def test_serve_inline_block_consumed_without_program():
    assert serve("SHOT-INLINE\ne(a,b).\nEND\nQUIT\n").splitlines() == \
        ["ERROR no program loaded", "OK bye"]
