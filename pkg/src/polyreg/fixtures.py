"""Access to the fixture corpus shipped inside the package."""

from pathlib import Path

ROOT = Path(__file__).parent / "fixtures"


def corpus_dir():
    return ROOT


def fixture_path(*parts):
    path = ROOT.joinpath(*parts)
    if not path.exists():
        raise FileNotFoundError(f"no shipped fixture {'/'.join(parts)}")
    return path


def interpretation_fixtures():
    return sorted((ROOT / "interpretations").glob("*.json"))


def enumerator_fixtures():
    return sorted((ROOT / "enumerators").glob("*.json"))


def paired_interpretations():
    """(json, forp) pairs that compute the same string function."""
    out = []
    for path in interpretation_fixtures():
        prog = path.with_suffix(".forp")
        if prog.exists():
            out.append((path, prog))
    return out


def paired_enumerators():
    out = []
    for path in enumerator_fixtures():
        prog = path.with_suffix(".forp")
        if prog.exists():
            out.append((path, prog))
    return out
