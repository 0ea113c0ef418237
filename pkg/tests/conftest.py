import json
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"
PAGES = FIXTURES / "pages"


def fixture_names() -> list[str]:
    return sorted(p.name for p in PAGES.glob("*.html"))


def read_page(name: str) -> str:
    return (PAGES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def audit_oracle() -> dict:
    return json.loads((FIXTURES / "audit_oracle.json").read_text())


@pytest.fixture(scope="session")
def mini_shop_html() -> str:
    return read_page("07_mini_shop.html")
