import re

from bs4 import BeautifulSoup, Comment, NavigableString, Tag

_WHITESPACE = re.compile(r"\s+")
_SPACE_BEFORE_PUNCT = re.compile(r"\s+([.,;:!?)])")
_BRACKETS = re.compile(r"[\[\]]")

# Elements whose content never belongs to the abstract text
_DROPPED = ["script", "style", "noscript", "template"]
_BLOCKS = {"p", "div", "li", "br", "ul", "ol", "section", "h1", "h2", "h3", "h4", "h5", "h6", "table", "tr"}


def _remove_unwanted_elements(soup: BeautifulSoup) -> None:
    for element in soup.find_all(_DROPPED):
        element.decompose()
    # Citation markers like [1] are not part of the prose
    for sup in soup.find_all("sup"):
        classes = sup.get("class") or []
        if "reference" in classes or "cite" in classes or "mw-ref" in classes:
            sup.decompose()


def _render(node, inside_link: bool = False) -> str:
    if isinstance(node, Comment):
        return ""
    if isinstance(node, NavigableString):
        return str(node)
    if not isinstance(node, Tag):
        return ""

    inner = "".join(_render(child, inside_link or node.name == "a") for child in node.children)
    if node.name == "a" and not inside_link:
        href = node.get("href")
        # link text carries no brackets
        anchor = _WHITESPACE.sub(" ", _BRACKETS.sub("", inner)).strip()
        if href and anchor:
            return f"[{anchor}]({href})"
        return inner
    if node.name in _BLOCKS:
        return f" {inner} "
    return inner


def html_to_markdown(html: str) -> str:
    """Abstract HTML to one line of Markdown: links become ``[anchor](url)``, other markup is dropped.

    Relative hrefs are kept as they are.
    """
    if not html:
        return ""
    soup = BeautifulSoup(html, "html.parser")
    _remove_unwanted_elements(soup)
    text = _WHITESPACE.sub(" ", _render(soup)).strip()
    return _SPACE_BEFORE_PUNCT.sub(r"\1", text)
