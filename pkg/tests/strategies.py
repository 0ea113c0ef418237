"""Hypothesis strategies for random shopping-page-like documents."""

from hypothesis import strategies as st

WORDS = (
    "cart", "shop", "deal", "blender", "towel", "shirt", "price", "sale",
    "home", "garden", "toys", "music", "offer", "basket", "news", "review",
)

CONTAINER_TAGS = ("div", "section", "article", "ul", "li", "nav")
LEAF_TAGS = ("p", "span", "h2", "h3", "em", "strong")

texts = st.lists(st.sampled_from(WORDS), min_size=1, max_size=6).map(" ".join)


@st.composite
def fragments(draw, depth: int = 2) -> str:
    if depth == 0 or draw(st.integers(0, 2)) == 0:
        if draw(st.booleans()):
            return draw(texts)
        tag = draw(st.sampled_from(LEAF_TAGS))
        return f"<{tag}>{draw(texts)}</{tag}>"
    tag = draw(st.sampled_from(CONTAINER_TAGS))
    attr = f' class="c{draw(st.integers(0, 3))}"' if draw(st.booleans()) else ""
    children = draw(st.lists(fragments(depth=depth - 1), min_size=0, max_size=4))
    return f"<{tag}{attr}>{''.join(children)}</{tag}>"


documents = st.lists(fragments(), min_size=0, max_size=6).map(
    lambda parts: "<html><head><title>T</title></head><body>"
    + "".join(parts)
    + "</body></html>"
)

word_lists = st.lists(st.sampled_from(WORDS), min_size=0, max_size=30)
