import pytest

from fpbs import Query


@pytest.fixture
def example_queries():
    """The five-query batch used throughout the worked-example tests."""
    return [
        Query(1, 1, (2, 5, 7)),
        Query(2, 2, (2, 3, 4)),
        Query(3, 3, (2, 5, 8)),
        Query(4, 4, (1, 3, 4, 5)),
        Query(5, 5, (1, 3, 6)),
    ]
