from graph.model import Iri
from infra.errors import PreconditionError, ValidationError

SEPARATOR = " : "


def build_prompt(entity: Iri, abstract: str) -> str:
    if not abstract:
        raise PreconditionError(f"Empty abstract for {entity}")
    return f"{entity.value}{SEPARATOR}{abstract}"


def split_prompt(prompt: str) -> tuple:
    """Inverse of build_prompt. IRIs hold no spaces, so the first separator ends the IRI."""
    entity, sep, abstract = prompt.partition(SEPARATOR)
    if not sep:
        raise ValidationError("Prompt has no ' : ' separator")
    return Iri(entity), abstract
