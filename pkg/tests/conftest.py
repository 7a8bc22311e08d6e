import numpy as np
import pytest

from nestner.annotations import BIOUL, Sentence, TagScheme, mention
from nestner.encoder import EncoderConfig
from nestner.model import NestedNER


def tiny_model(labels=("X", "Y"), tokens=("a", "b", "c", "d", "e"), tag_layer=1, dropout=0.0,
               seed=0, scheme=BIOUL, d_model=8, n_layers=2):
    s = TagScheme(scheme, labels)
    config = EncoderConfig(vocab_size=1, max_len=64, n_layers=n_layers, n_heads=2, d_model=d_model,
                           d_ff=16, tag_layer=tag_layer, dropout=dropout, read_scheme=s)
    return NestedNER(config, s, tokens, seed=seed)


@pytest.fixture
def nested_sentence():
    return Sentence(("a", "b", "c", "d"), frozenset({mention(1, 2, "X"), mention(0, 3, "Y")}))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


ACCEPTANCE_LINES = []


def report_acceptance(number: int, passed: bool, detail: str):
    line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
