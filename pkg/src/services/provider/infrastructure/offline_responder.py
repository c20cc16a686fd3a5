"""Deterministic lexical stand-in for a language model.

Answers every shipped template from the prompt text alone, so full pipeline
runs work offline. Outputs depend only on the request, never on call order.
"""
import json
import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.prompts import inputs
from ..domain.entities import CompletionRequest

_SENTENCE = re.compile(r"[^.!?\n]+[.!?]?")
_WORD = re.compile(r"[a-z0-9']+")

# (discovery theme key, anchors matched against theme names, keywords matched against text)
LEXICON: Tuple[Tuple[str, Tuple[str, ...], Tuple[str, ...]], ...] = (
    ("rooms", ("room",), ("room", "rooms", "bed", "beds", "pillow", "pillows", "balcony", "suite", "view")),
    ("bathroom", ("bathroom",), ("bathroom", "shower", "towel", "towels", "toilet", "bathtub")),
    ("service", ("staff", "service"), ("staff", "service", "reception", "receptionist", "concierge", "desk")),
    ("guide", ("guide", "instructor", "host"), ("guide", "guides", "instructor", "host", "driver")),
    ("location", ("location",), ("location", "located", "walk", "walking", "near", "downtown", "metro", "station")),
    ("cleanliness", ("clean",), ("clean", "cleaned", "dirty", "spotless", "tidy", "housekeeping")),
    ("food", ("food", "breakfast", "beverage"), ("food", "breakfast", "dinner", "lunch", "restaurant", "meal", "meals", "coffee", "buffet")),
    ("transportation", ("transport", "shuttle", "pickup"), ("shuttle", "pickup", "bus", "transfer")),
    ("value", ("value", "price", "money"), ("price", "value", "expensive", "cheap", "worth", "money", "overpriced")),
    ("facilities", ("facilit", "building", "amenit"), ("pool", "gym", "lobby", "wifi", "parking", "spa", "elevator")),
    ("noise", ("quiet", "noise"), ("quiet", "noisy", "noise", "loud", "peaceful")),
    ("clarity", ("clarity",), ("clear", "unclear", "writing", "written", "presentation", "readable")),
    ("novelty", ("novel",), ("novel", "novelty", "original", "incremental")),
    ("soundness", ("sound",), ("experiments", "proof", "proofs", "rigorous", "baseline", "baselines", "evidence", "flawed")),
    ("advancement", ("advance",), ("significant", "impact", "improvement", "contribution", "useful")),
    ("compliance", ("complian",), ("anonymity", "ethics", "policy", "scope", "formatting")),
)

POSITIVE = frozenset({
    "great", "good", "excellent", "friendly", "helpful", "clean", "amazing", "comfortable", "comfy",
    "lovely", "nice", "quiet", "spotless", "perfect", "beautiful", "delicious", "clear", "novel",
    "rigorous", "convincing", "worth", "best", "fantastic", "wonderful", "knowledgeable", "fun",
    "peaceful", "convenient", "tasty", "significant", "useful", "recommend",
})
NEGATIVE = frozenset({
    "bad", "dirty", "noisy", "rude", "terrible", "awful", "poor", "small", "loud", "broken",
    "expensive", "cold", "slow", "unclear", "flawed", "incremental", "late", "worst", "disappointing",
    "overpriced", "smelly", "boring", "cramped", "unhelpful", "weak",
})
NEGATORS = frozenset({"not", "never", "no", "isn't", "wasn't", "don't", "didn't", "hardly"})
STOPWORDS = frozenset({
    "the", "a", "an", "and", "or", "but", "was", "were", "is", "are", "be", "to", "of", "in", "on",
    "at", "for", "with", "it", "its", "this", "that", "we", "i", "our", "my", "they", "very", "so",
    "had", "has", "have", "there", "their", "as", "by", "from", "also", "really",
})


def words(text: str) -> List[str]:
    return _WORD.findall(text.casefold())


def sentences(text: str) -> List[str]:
    return [s.strip() for s in _SENTENCE.findall(text) if s.strip()]


def content_words(text: str) -> List[str]:
    return [w for w in words(text) if w not in STOPWORDS]


def polarity(text: str) -> int:
    """Positive minus negative lexicon hits, flipping a hit right after a negator"""
    score = 0
    tokens = words(text)
    for i, token in enumerate(tokens):
        sign = 1 if token in POSITIVE else -1 if token in NEGATIVE else 0
        if sign and i > 0 and tokens[i - 1] in NEGATORS:
            sign = -sign
        score += sign
    return score


def sentiment_label(text: str) -> str:
    score = polarity(text)
    return "positive" if score > 0 else "negative" if score < 0 else "neutral"


def keywords_for_theme(theme_name: str) -> Tuple[str, ...]:
    name = theme_name.casefold()
    found: List[str] = [w for w in words(name) if len(w) > 3 and w not in STOPWORDS]
    for _key, anchors, keywords in LEXICON:
        if any(anchor in name for anchor in anchors):
            found.extend(keywords)
    return tuple(dict.fromkeys(found))


def first_keyword(sentence: str, keywords: Sequence[str]) -> Optional[str]:
    tokens = words(sentence)
    for token in tokens:
        if token in keywords:
            return token
    return None


def _triples(items: List[Dict[str, str]]):
    return items[0] if len(items) == 1 else items


def _truncate(text: str, limit: int) -> str:
    tokens = text.split()
    return " ".join(tokens[:limit])


class OfflineResponder:
    """Callable answering CompletionRequests by template family"""

    def __init__(self):
        self._routes: Tuple[Tuple[str, Callable[[CompletionRequest], str]], ...] = (
            ("discovery_", self._discovery),
            ("extraction_", self._extraction),
            ("validation_", self._validation),
            ("redundancy_theme_summary", self._summary),
            ("theme_summary_", self._summary),
            ("product_summary_", self._summary),
            ("judge_", self._judge),
            ("sentiment_score", self._sentiment_score),
            ("geval_", self._geval),
            ("theme_identification_", self._theme_identification),
        )

    def supports(self, request: CompletionRequest) -> bool:
        return any(request.template_id.startswith(prefix) for prefix, _ in self._routes)

    def __call__(self, request: CompletionRequest) -> str:
        for prefix, route in self._routes:
            if request.template_id.startswith(prefix):
                return route(request)
        raise KeyError(request.template_id)

    def _discovery(self, request: CompletionRequest) -> str:
        grouped: Dict[str, List[Dict[str, str]]] = {}
        for sentence in sentences(request.user_prompt):
            theme, aspect = "overall_experience", None
            for key, _anchors, keywords in LEXICON:
                aspect = first_keyword(sentence, keywords)
                if aspect:
                    theme = key
                    break
            aspect = aspect or (content_words(sentence) or ["experience"])[0]
            grouped.setdefault(theme, []).append(
                {"aspect": aspect, "opinion": sentence, "sentiment": sentiment_label(sentence)}
            )
        return json.dumps({k: _triples(v) for k, v in grouped.items()}, ensure_ascii=False)

    def _extraction(self, request: CompletionRequest) -> str:
        names = inputs.theme_names_in(request.system_prompt)
        output: Dict[str, object] = {}
        review_sentences = sentences(request.user_prompt)
        for name in names:
            keywords = keywords_for_theme(name)
            found = []
            for sentence in review_sentences:
                aspect = first_keyword(sentence, keywords)
                if aspect:
                    found.append({"aspect": aspect, "opinion": sentence, "sentiment": sentiment_label(sentence)})
            output[name] = _triples(found) if found else None
        return json.dumps(output, ensure_ascii=False)

    def _validation(self, request: CompletionRequest) -> str:
        review, theme, model_output = inputs.split_validation_input(request.user_prompt)
        opinion = str(model_output.get("opinion", "")).strip().casefold()
        keywords = keywords_for_theme(theme)
        if opinion and opinion in review.casefold() and first_keyword(opinion, keywords):
            return f"Yes. The quoted opinion is about {theme}."
        return f"No. The quoted opinion does not fit {theme}."

    def _summary(self, request: CompletionRequest) -> str:
        items = inputs.parse_opinion_lines(request.user_prompt)
        seen: Dict[str, None] = {}
        for _label, text in items:
            seen.setdefault(text.strip().rstrip(".") + ".", None)
        limit = 45 if request.template_id.startswith("redundancy") else 80
        summary = _truncate(" ".join(seen), limit) or "No opinions were provided."
        return json.dumps({"summary": summary}, ensure_ascii=False)

    def _judge(self, request: CompletionRequest) -> str:
        source, summary1, summary2 = inputs.split_judge_input(request.user_prompt)
        source_words = set(content_words(source))

        def coverage(summary: str) -> float:
            return len(source_words & set(content_words(summary))) / max(len(source_words), 1)

        def faithfulness(summary: str) -> float:
            tokens = content_words(summary)
            return sum(1 for t in tokens if t in source_words) / max(len(tokens), 1)

        metric = coverage if request.template_id.endswith("coverage") else faithfulness
        a, b = metric(summary1), metric(summary2)
        answer = "3" if abs(a - b) < 1e-9 else ("1" if a > b else "2")
        return json.dumps({"answer": answer, "reasoning": f"scores {a:.3f} vs {b:.3f}"})

    def _sentiment_score(self, request: CompletionRequest) -> str:
        tokens = words(request.user_prompt)
        pos = sum(1 for t in tokens if t in POSITIVE)
        neg = sum(1 for t in tokens if t in NEGATIVE)
        score = 50 if pos + neg == 0 else round(50 + 50 * (pos - neg) / (pos + neg))
        return json.dumps({"score": int(score)})

    def _geval(self, request: CompletionRequest) -> str:
        source, summary = inputs.split_geval_input(request.user_prompt)
        source_words = set(content_words(source))
        claims = sentences(summary)
        if not claims:
            return "0.00"
        supported = 0
        for claim in claims:
            tokens = content_words(claim)
            if tokens and sum(1 for t in tokens if t in source_words) / len(tokens) >= 0.5:
                supported += 1
        return f"{supported / len(claims):.2f}"

    def _theme_identification(self, request: CompletionRequest) -> str:
        match = re.search(r"Definition of (.+?):\n", request.system_prompt)
        theme = match.group(1) if match else ""
        keywords = keywords_for_theme(theme)
        fragments = [s for s in sentences(request.user_prompt) if first_keyword(s, keywords)]
        return "\n".join(fragments) if fragments else "No related fragments"
