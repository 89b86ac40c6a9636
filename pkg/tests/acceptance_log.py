"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = []


def record(tag, ok, detail, seconds):
    line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f} s]"
    LINES.append(line)
    print(line)
    return ok
