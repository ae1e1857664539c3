from .dialog import (
    StateIndex,
    TemplateTree,
    TurnTemplate,
    act_response_substitute,
    build_state_index,
    build_tree,
    extract_templates,
    surface_realize,
    synthesize_dialog,
)
from .sentence import back_translate, fragment_rotate, llm_paraphrase, paraphrase
from .word import SubstitutionPolicy, substitute_embedding, substitute_masked_lm

__all__ = [
    "StateIndex",
    "SubstitutionPolicy",
    "TemplateTree",
    "TurnTemplate",
    "act_response_substitute",
    "back_translate",
    "build_state_index",
    "build_tree",
    "extract_templates",
    "fragment_rotate",
    "llm_paraphrase",
    "paraphrase",
    "substitute_embedding",
    "substitute_masked_lm",
    "surface_realize",
    "synthesize_dialog",
]
