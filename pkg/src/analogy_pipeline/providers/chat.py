"""Chat-completion client: retries, response cache, transcript log, stubs.

Providers receive the full :class:`ChatRequest` (model, rendered prompt, and
the originating signature with its structured inputs). HTTP providers only
look at the model and prompt; scripted and synthetic stubs may inspect the
signature to produce schema-valid replies without any network access.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from ..errors import ProviderError
from .cache import ResponseCache, cache_key
from .models import ModelRef
from .signatures import PromptSignature, parse_response, render_prompt, render_response


@dataclass(frozen=True)
class ChatRequest:
    model: ModelRef
    prompt: str
    signature: PromptSignature
    inputs: dict


@dataclass(frozen=True)
class CompletionResult:
    fields: dict
    raw: str
    from_cache: bool


class ChatProvider(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class HttpChatProvider:
    """OpenAI-compatible ``/chat/completions`` endpoint."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers, timeout=timeout, transport=transport
        )

    def complete(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.model.temperature,
            "max_tokens": request.model.max_output_tokens,
        }
        try:
            response = self._client.post("/chat/completions", json=payload)
        except httpx.TransportError as exc:
            raise ProviderError(f"transport failure: {exc}", transient=True) from exc
        if response.status_code >= 500 or response.status_code == 429:
            raise ProviderError(f"provider returned {response.status_code}", transient=True)
        if response.status_code >= 400:
            raise ProviderError(f"provider returned {response.status_code}: {response.text}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc


class ScriptedChatProvider:
    """Deterministic stub fed by explicit scripts.

    ``script`` is either a flat list of responses (consumed in call order) or
    a dict keyed by signature name, each value a list consumed per call to
    that signature. A response entry may be raw text or a dict of output
    fields, which is rendered through the signature's canonical response
    format at call time so it exercises the real parser.
    """

    def __init__(self, script: list | dict[str, list]):
        if isinstance(script, dict):
            self._by_signature = {k: list(v) for k, v in script.items()}
            self._queue = None
        else:
            self._by_signature = None
            self._queue = list(script)
        self.call_count = 0
        self.prompts: list[str] = []

    def complete(self, request: ChatRequest) -> str:
        self.call_count += 1
        self.prompts.append(request.prompt)
        if self._queue is not None:
            queue = self._queue
        else:
            queue = self._by_signature.get(request.signature.name)
            if queue is None:
                raise ProviderError(
                    f"scripted provider has no entries for signature {request.signature.name!r}"
                )
        if not queue:
            raise ProviderError(
                f"scripted provider exhausted for signature {request.signature.name!r}"
            )
        entry = queue.pop(0)
        if callable(entry):
            entry = entry(request)
        if isinstance(entry, dict):
            return render_response(request.signature, entry)
        return str(entry)


def _digest_int(*parts: str) -> int:
    joined = "\x1f".join(parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


class SyntheticChatProvider:
    """Offline stand-in that answers every in-tree signature deterministically.

    Content is derived from the request inputs alone, so identical runs give
    identical outputs. Unknown signatures fall back to shape-valid filler.
    """

    def __init__(self):
        self.call_count = 0

    def complete(self, request: ChatRequest) -> str:
        self.call_count += 1
        sig, inputs = request.signature, request.inputs
        name = sig.name
        if name == "generate_source_candidates":
            return render_response(sig, {"candidates": self._candidates(inputs)})
        if name == "rerank_shortlist":
            shortlist = list(inputs["candidates"])
            ordered = sorted(shortlist, key=lambda n: _digest_int("rerank", inputs["target"], n))
            return render_response(sig, {"top_candidates": ordered[:3]})
        if name == "match_subconcepts":
            pairs = list(zip(inputs["target_subconcepts"], inputs["source_subconcepts"]))
            return render_response(sig, {"pairs": pairs})
        if name == "generate_source_subconcepts":
            subs = [
                f"{inputs['source']} {t.split()[0] if t.split() else t}"
                for t in inputs["target_subconcepts"]
            ]
            return render_response(sig, {"source_subconcepts": subs})
        if name.startswith("explanation_"):
            return render_response(sig, self._explanation(sig, inputs))
        if name == "judge_analogy":
            return render_response(sig, self._verdict(inputs))
        return render_response(sig, self._generic(sig, inputs))

    def _candidates(self, inputs: dict) -> list[str]:
        target = inputs["target"]
        n = int(inputs.get("how_many", 20))
        return [f"{target} counterpart {i + 1}" for i in range(n)]

    def _explanation(self, sig: PromptSignature, inputs: dict) -> dict:
        target, source = inputs["target"], inputs["source"]
        out = sig.outputs[0]
        if "pairs" in inputs:
            texts = [
                f"{left} corresponds to {right}, linking {target} to {source}."
                for left, right in inputs["pairs"]
            ]
            return {out.name: texts}
        if "target_subconcepts" in inputs:
            texts = [
                f"{t} of {target} behaves like {s} of {source}."
                for t, s in zip(inputs["target_subconcepts"], inputs["source_subconcepts"])
            ]
            return {out.name: texts or [f"{target} works like {source}."]}
        text = f"{target} works like {source}: both transform inputs into structured behavior."
        if out.shape == "text":
            return {out.name: text}
        return {out.name: [text]}

    def _verdict(self, inputs: dict) -> dict:
        fields = {}
        for dim in ("coherence", "mapping", "explanatory"):
            score = 1 + _digest_int(dim, inputs["target"], inputs["source"]) % 3
            fields[f"{dim}_reasoning"] = (
                f"Deterministic synthetic assessment of {dim} for "
                f"{inputs['target']} vs {inputs['source']}."
            )
            fields[f"{dim}_score"] = str(score)
        return fields

    def _generic(self, sig: PromptSignature, inputs: dict) -> dict:
        fields = {}
        stamp = _digest_int(sig.name, json.dumps(inputs, sort_keys=True, default=str))
        for out in sig.outputs:
            if out.shape == "text":
                fields[out.name] = f"synthetic {out.name} {stamp % 10_000}"
            elif out.shape == "list-of-text":
                fields[out.name] = [f"synthetic {out.name} {i}" for i in range(3)]
            else:
                fields[out.name] = [(f"left {i}", f"right {i}") for i in range(3)]
        return fields


class ChatClient:
    """Wraps a provider with caching, bounded retries, and transcript logging."""

    def __init__(
        self,
        provider: ChatProvider,
        cache: ResponseCache | None = None,
        transcript_path: str | Path | None = None,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        max_concurrency: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.cache = cache
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._semaphore = threading.Semaphore(max_concurrency)
        self._transcript_lock = threading.Lock()
        self._sleep = sleep

    def complete(self, model: ModelRef, sig: PromptSignature, inputs: dict) -> CompletionResult:
        missing = [n for n in sig.input_names() if n not in inputs]
        if missing:
            raise ValueError(f"signature {sig.name!r}: missing input fields {missing}")
        prompt = render_prompt(sig, inputs)
        key = cache_key(model.model_id, prompt, model.temperature)
        from_cache = False
        raw = self.cache.get(key) if self.cache is not None else None
        if raw is not None:
            from_cache = True
        else:
            raw = self._call_with_retries(ChatRequest(model, prompt, sig, inputs))
            if self.cache is not None:
                self.cache.set(key, raw)
        self._log_transcript(model, prompt, raw)
        fields = parse_response(sig, raw)
        return CompletionResult(fields=fields, raw=raw, from_cache=from_cache)

    def _call_with_retries(self, request: ChatRequest) -> str:
        last_error: ProviderError | None = None
        for attempt in range(self.max_attempts):
            try:
                with self._semaphore:
                    return self.provider.complete(request)
            except ProviderError as exc:
                last_error = exc
                if not exc.transient:
                    raise
                if attempt + 1 < self.max_attempts:
                    self._sleep(self.backoff_base * (2**attempt))
        raise ProviderError(
            f"provider failed after {self.max_attempts} attempts: {last_error}"
        )

    def _log_transcript(self, model: ModelRef, prompt: str, response: str):
        if self.transcript_path is None:
            return
        line = json.dumps(
            {"model": model.model_id, "prompt": prompt, "response": response},
            ensure_ascii=False,
            sort_keys=True,
        )
        with self._transcript_lock:
            self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
            with self.transcript_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def chat_complete(
    client: ChatClient, model: ModelRef, sig: PromptSignature, inputs: dict
) -> dict:
    """Parsed output fields for one structured completion."""
    return client.complete(model, sig, inputs).fields
