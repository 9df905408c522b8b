def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        clauses = mod.RESULTS[n]
        failed = [c for c in clauses if not c[1]]
        verdict = "PASS" if not failed else "FAIL"
        shown = failed or clauses
        detail = "; ".join(f"{c}: {d}" if d else c for c, _, d in shown)
        tr.write_line(f"criterion {n:2d} {verdict}  ({len(clauses) - len(failed)}/{len(clauses)} clauses)  {detail}")
