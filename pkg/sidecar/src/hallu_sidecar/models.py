"""Model implementations and the registry that maps roles onto them.

Two tiers live here. The ``builtin:*`` models are dependency-free
approximations meant for protocol conformance testing and development;
they obey every service invariant (determinism, score ranges, label
vocabulary) but make no accuracy claims. The remaining schemes wrap real
libraries and are only importable with the ``models`` extra installed.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
from dataclasses import dataclass, field
from importlib import resources

from .config import ROLES, SidecarConfig, SidecarConfigError

NLI_LABELS = ("entailment", "neutral", "contradiction")

_NEGATORS = frozenset({"not", "no", "never"})

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")

# Dates first so "January 5, 1999" stays one span instead of splitting on
# the capitalized month. Entity spans must come back non-overlapping and
# ascending, which the single left-to-right scan guarantees.
_DATE_RES = (
    re.compile(
        r"\b(?:January|February|March|April|May|June|July|August|September|"
        r"October|November|December) \d{1,2}, \d{4}\b"
    ),
    re.compile(r"\b\d{4}-\d{2}-\d{2}\b"),
)
# A word is either an initial ("A.") or a capitalized token; keeping the
# period out of the general token class stops spans from swallowing
# sentence boundaries ("London. Her").
_CAP_WORD = r"(?:[A-Z]\.|[A-Z][A-Za-z0-9'&-]*)"
_CAP_SPAN_RE = re.compile(rf"\b{_CAP_WORD}(?: {_CAP_WORD})*\b")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def _softmax(logits: tuple[float, ...]) -> tuple[float, ...]:
    peak = max(logits)
    exps = [math.exp(x - peak) for x in logits]
    total = sum(exps)
    return tuple(x / total for x in exps)


class HeuristicNerModel:
    """Capitalized-span and date extractor; no learned weights."""

    def extract(self, texts: list[str]) -> list[list[dict]]:
        return [self._one(text) for text in texts]

    def _one(self, text: str) -> list[dict]:
        taken: list[tuple[int, int]] = []
        spans: list[tuple[int, int]] = []
        for pattern in _DATE_RES:
            for match in pattern.finditer(text):
                span = (match.start(), match.end())
                if not any(s < span[1] and span[0] < e for s, e in taken):
                    taken.append(span)
                    spans.append(span)
        for match in _CAP_SPAN_RE.finditer(text):
            span = (match.start(), match.end())
            if not any(s < span[1] and span[0] < e for s, e in taken):
                taken.append(span)
                spans.append(span)
        spans.sort()
        return [{"text": text[s:e], "start": s, "end": e} for s, e in spans]


class TokenOverlapSimilarity:
    """Jaccard overlap of lowercased alphanumeric tokens."""

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [self._one(a, b) for a, b in pairs]

    def _one(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        ta, tb = _tokens(a), _tokens(b)
        if not ta and not tb:
            return 1.0
        if not ta or not tb:
            return 0.0
        value = len(ta & tb) / len(ta | tb)
        return min(1.0, max(0.0, value))


class LexicalNliModel:
    """Token-coverage entailment proxy with a negation-mismatch penalty."""

    def judge(self, pairs: list[tuple[str, str]]) -> list[dict]:
        return [self._one(premise, hypothesis) for premise, hypothesis in pairs]

    def _one(self, premise: str, hypothesis: str) -> dict:
        prem, hyp = _tokens(premise), _tokens(hypothesis)
        coverage = len(hyp & prem) / len(hyp) if hyp else 0.0
        neg_mismatch = 1.0 if (bool(prem & _NEGATORS) != bool(hyp & _NEGATORS)) else 0.0
        logits = (3.0 * coverage, 3.0 * (1.0 - coverage), 4.0 * neg_mismatch)
        probs = _softmax(logits)
        best = max(range(3), key=lambda i: (probs[i], -i))
        return {
            "label": NLI_LABELS[best],
            "scores": {name: probs[i] for i, name in enumerate(NLI_LABELS)},
        }


def _load_templates() -> dict[str, str]:
    root = resources.files(__package__) / "templates"
    out = {}
    for entry in root.iterdir():
        if entry.name.endswith(".txt"):
            out[entry.name[: -len(".txt")]] = entry.read_text(encoding="utf-8")
    return out


class TemplateAugmentModel:
    """Deterministic text extender driven by shipped prompt templates.

    The filler sentence is derived from sha256 of (seed, prompt_id, text),
    so identical requests always produce identical output and the output
    always begins with the input text.
    """

    _NOUNS = ("shelf", "drawer", "archive", "cabinet", "binder", "folder", "ledger", "crate")
    _ITEMS = ("pamphlets", "clippings", "notes", "receipts", "labels", "index cards",
              "printouts", "envelopes")

    def __init__(self):
        self.templates = _load_templates()

    @property
    def prompt_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.templates))

    def augment(self, texts: list[str], prompt_id: str, seed: int) -> list[str]:
        if prompt_id not in self.templates:
            raise KeyError(prompt_id)
        return [self._one(text, prompt_id, seed) for text in texts]

    def _one(self, text: str, prompt_id: str, seed: int) -> str:
        digest = hashlib.sha256(f"{seed}\x1f{prompt_id}\x1f{text}".encode("utf-8")).digest()
        noun = self._NOUNS[digest[0] % len(self._NOUNS)]
        items = self._ITEMS[digest[1] % len(self._ITEMS)]
        count = 10 + digest[2] % 60
        filler = f"A nearby {noun} holds {count} spare {items}."
        return f"{text} {filler}" if text else filler


def _missing(scheme: str, package: str) -> SidecarConfigError:
    return SidecarConfigError(
        f"model scheme '{scheme}' needs the optional '{package}' dependency; "
        f"install the service with the [models] extra"
    )


class SpacyNerModel:
    """Real NER via a spaCy pipeline (``spacy:<model-name>``).

    spaCy pipelines are not thread-safe, so invocations are serialized.
    """

    def __init__(self, model_name: str, device: str):
        try:
            import spacy
        except ImportError as exc:
            raise _missing("spacy", "spacy") from exc
        if device != "cpu":
            spacy.prefer_gpu()
        self._nlp = spacy.load(model_name, disable=["lemmatizer"])
        self._lock = threading.Lock()

    def extract(self, texts: list[str]) -> list[list[dict]]:
        out = []
        with self._lock:
            for doc in self._nlp.pipe(texts):
                out.append(
                    [{"text": ent.text, "start": ent.start_char, "end": ent.end_char}
                     for ent in doc.ents]
                )
        return out


class SentenceEmbeddingSimilarity:
    """Cosine similarity of sentence embeddings (``st:<model-name>``)."""

    def __init__(self, model_name: str, device: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise _missing("st", "sentence-transformers") from exc
        self._model = SentenceTransformer(model_name, device=device)
        self._lock = threading.Lock()

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        with self._lock:
            lefts = self._model.encode([a for a, _ in pairs], normalize_embeddings=True)
            rights = self._model.encode([b for _, b in pairs], normalize_embeddings=True)
        scores = (lefts * rights).sum(axis=1)
        # Cosine lands in [-1, 1]; the wire contract wants [0, 1].
        return [min(1.0, max(0.0, float(s))) for s in scores]


class TransformerNliModel:
    """Real NLI via a sequence-classification checkpoint (``hf-nli:<model>``)."""

    def __init__(self, model_name: str, device: str):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise _missing("hf-nli", "transformers") from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModelForSequenceClassification.from_pretrained(model_name)
        self._model.to(device).eval()
        self._device = device
        self._lock = threading.Lock()
        id2label = {i: lab.lower() for i, lab in self._model.config.id2label.items()}
        self._order = [None] * len(id2label)
        for idx, label in id2label.items():
            self._order[idx] = label

    def judge(self, pairs: list[tuple[str, str]]) -> list[dict]:
        if not pairs:
            return []
        enc = self._tokenizer(
            [p for p, _ in pairs], [h for _, h in pairs],
            padding=True, truncation=True, return_tensors="pt",
        ).to(self._device)
        with self._lock, self._torch.no_grad():
            probs = self._model(**enc).logits.softmax(dim=-1).cpu().tolist()
        out = []
        for row in probs:
            scores = {label: 0.0 for label in NLI_LABELS}
            for idx, label in enumerate(self._order):
                if label in scores:
                    scores[label] = row[idx]
            label = max(NLI_LABELS, key=lambda name: scores[name])
            out.append({"label": label, "scores": scores})
        return out


class GenerativeAugmentModel:
    """Real augmentation via a causal LM (``hf-generate:<model>``).

    Decoding is greedy (no sampling, the temperature-0 equivalent) so any
    request carrying a seed is reproducible by construction; the seed is
    still applied to torch's RNG in case a checkpoint has stochastic ops.
    Greedy decoding at 128 new tokens is a documented default, not a
    claim about how any published augmentation run was decoded.
    """

    def __init__(self, model_name: str, device: str):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise _missing("hf-generate", "transformers") from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModelForCausalLM.from_pretrained(model_name)
        self._model.to(device).eval()
        self._device = device
        self._lock = threading.Lock()
        self.templates = _load_templates()

    @property
    def prompt_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.templates))

    def augment(self, texts: list[str], prompt_id: str, seed: int) -> list[str]:
        if prompt_id not in self.templates:
            raise KeyError(prompt_id)
        template = self.templates[prompt_id]
        out = []
        for text in texts:
            prompt = template.format(text=text)
            enc = self._tokenizer(prompt, return_tensors="pt").to(self._device)
            with self._lock:
                self._torch.manual_seed(seed)
                with self._torch.no_grad():
                    gen = self._model.generate(
                        **enc, do_sample=False, max_new_tokens=128,
                        num_return_sequences=1,
                        pad_token_id=self._tokenizer.eos_token_id,
                    )
            continuation = self._tokenizer.decode(
                gen[0][enc["input_ids"].shape[1]:], skip_special_tokens=True
            ).strip()
            out.append(f"{text} {continuation}" if continuation else text)
        return out


_BUILTIN_FACTORIES = {
    ("ner", "heuristic"): lambda device: HeuristicNerModel(),
    ("similarity", "token-overlap"): lambda device: TokenOverlapSimilarity(),
    ("nli", "lexical"): lambda device: LexicalNliModel(),
    ("augment", "template"): lambda device: TemplateAugmentModel(),
}

_REAL_FACTORIES = {
    ("ner", "spacy"): SpacyNerModel,
    ("similarity", "st"): SentenceEmbeddingSimilarity,
    ("nli", "hf-nli"): TransformerNliModel,
    ("augment", "hf-generate"): GenerativeAugmentModel,
}


def _build_model(role: str, identifier: str, device: str):
    scheme, _, name = identifier.partition(":")
    if not name:
        raise SidecarConfigError(f"model identifier '{identifier}' must look like 'scheme:name'")
    if scheme == "builtin":
        factory = _BUILTIN_FACTORIES.get((role, name))
        if factory is None:
            raise SidecarConfigError(f"no builtin model '{name}' for role '{role}'")
        return factory(device)
    factory = _REAL_FACTORIES.get((role, scheme))
    if factory is None:
        raise SidecarConfigError(f"unknown model scheme '{scheme}' for role '{role}'")
    return factory(name, device)


@dataclass
class ModelRegistry:
    """Loaded models keyed by role, in the order the wire protocol lists them."""

    models: dict[str, object] = field(default_factory=dict)

    @property
    def capabilities(self) -> list[str]:
        return [role for role in ROLES if role in self.models]

    def get(self, role: str):
        return self.models.get(role)


def build_registry(config: SidecarConfig) -> ModelRegistry:
    registry = ModelRegistry()
    for role in ROLES:
        identifier = config.models.get(role)
        if identifier is not None:
            registry.models[role] = _build_model(role, identifier, config.device)
    return registry
