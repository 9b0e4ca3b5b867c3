"""Thin HTTP adapters for live providers.

All acceptance testing runs against the deterministic offline providers;
these adapters only translate our request types to provider payloads and
are configured entirely through environment variables (see README).
"""

from __future__ import annotations

import base64
import os

import httpx

from .model import GenerationKey, LlmRequest


class ProviderConfigError(RuntimeError):
    pass


class StabilityUpstream:
    """POSTs a (prompt, seed, cfg) payload and returns PNG bytes."""

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str | None = None,
        timeout: float = 30.0,
    ):
        self.api_key = api_key or os.environ.get("STABILITY_API_KEY")
        self.base_url = (
            base_url
            or os.environ.get("STABILITY_BASE_URL")
            or "https://api.stability.ai"
        )
        self.timeout = timeout
        if not self.api_key:
            raise ProviderConfigError("STABILITY_API_KEY is not set")

    def __call__(self, key: GenerationKey) -> bytes:
        response = httpx.post(
            f"{self.base_url.rstrip('/')}/v1/generation/stable-diffusion-v2/text-to-image",
            headers={
                "Authorization": f"Bearer {self.api_key}",
                "Accept": "application/json",
            },
            json={
                "text_prompts": [{"text": key.prompt}],
                "seed": key.seed,
                "cfg_scale": key.cfg,
                "width": 512,
                "height": 512,
                "samples": 1,
            },
            timeout=self.timeout,
        )
        response.raise_for_status()
        artifacts = response.json().get("artifacts", [])
        if not artifacts:
            raise RuntimeError("provider returned no image artifacts")
        return base64.b64decode(artifacts[0]["base64"])


class OpenAiChatUpstream:
    """POSTs chat messages and returns the completion text."""

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str | None = None,
        model: str | None = None,
        timeout: float = 30.0,
    ):
        self.api_key = api_key or os.environ.get("OPENAI_API_KEY")
        self.base_url = (
            base_url or os.environ.get("OPENAI_BASE_URL") or "https://api.openai.com/v1"
        )
        self.model = model or os.environ.get("OPENAI_MODEL") or "gpt-3.5-turbo"
        self.timeout = timeout
        if not self.api_key:
            raise ProviderConfigError("OPENAI_API_KEY is not set")

    def __call__(self, request: LlmRequest) -> str:
        response = httpx.post(
            f"{self.base_url.rstrip('/')}/chat/completions",
            headers={"Authorization": f"Bearer {self.api_key}"},
            json={
                "model": self.model,
                "messages": [
                    {"role": role, "content": content}
                    for role, content in request.messages
                ],
            },
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]
