import itertools

import pytest

from polyreg import fixtures


def words_upto(alphabet, max_len, min_len=0):
    for length in range(min_len, max_len + 1):
        for combo in itertools.product(sorted(alphabet), repeat=length):
            yield "".join(combo)


@pytest.fixture(scope="session")
def corpus_dir():
    return fixtures.corpus_dir()
