"""Assemble a PipelineRuntime snapshot from an AppConfig.

Reload-safe: every call builds a brand-new snapshot; the owner swaps it in
atomically.
"""

from __future__ import annotations

from . import classify as classify_mod
from . import guard as guard_mod
from .config import AppConfig
from .corpus import load_corpus
from .evalstore import EvalStore
from .faq import FaqRegistry
from .generate import HttpGenerativeClient, StubGenerativeClient
from .pipeline import FileSink, LogSinks, PipelineRuntime, WebhookSink
from .retrieve import HttpSearchClient, SearchPolicy, build_index
from .rewrite import EMPTY_RULES, load_rules


def build_runtime_from_config(config: AppConfig, eval_store: EvalStore | None = None) -> PipelineRuntime:
    corpus = load_corpus(config.corpus_root)
    policy = guard_mod.load_policy(config.guard_policy_path) if config.guard_policy_path else guard_mod.DEFAULT_POLICY
    classify_rules = (
        classify_mod.load_rules(config.classify_rules_path)
        if config.classify_rules_path
        else classify_mod.DEFAULT_RULES
    )
    rewrite_rules = load_rules(config.rewrite_rules_path) if config.rewrite_rules_path else EMPTY_RULES
    registry = FaqRegistry(config.faq_registry_path) if config.faq_registry_path else FaqRegistry()
    clients = [
        HttpGenerativeClient(
            model_id=entry.get("model_id", f"model-{i}"),
            endpoint=entry["endpoint"],
            max_tokens=entry.get("max_tokens", 400),
            timeout=entry.get("timeout", 8.0),
        )
        for i, entry in enumerate(config.generative_endpoints)
    ] or [StubGenerativeClient()]
    translator = (
        guard_mod.DictionaryTranslator(config.translator_dictionary_path)
        if config.translator_dictionary_path
        else guard_mod.IdentityTranslator()
    )
    if eval_store is None and config.eval_data_dir:
        eval_store = EvalStore(config.eval_data_dir)
    sinks = LogSinks(
        file=FileSink(config.log_path) if config.log_path else None,
        webhook=WebhookSink(config.webhook_url) if config.webhook_url else None,
        eval_store=eval_store,
    )
    return PipelineRuntime(
        corpus=corpus,
        index=build_index(corpus),
        guard_policy=policy,
        classify_rules=classify_rules,
        rewrite_rules=rewrite_rules,
        registry=registry,
        clients=clients,
        translator=translator,
        search_policy=SearchPolicy(max_hits=config.max_hits, min_score=config.min_score),
        search_source="external" if config.search_endpoint else "builtin",
        search_client=HttpSearchClient(config.search_endpoint) if config.search_endpoint else None,
        sinks=sinks,
        faq_threshold=config.faq_threshold,
        context_budget=config.context_budget,
        generation_deadline_s=config.generation_deadline_s,
        total_deadline_s=config.total_deadline_s,
        topic_url_base=config.topic_url_base,
        max_input_len=config.max_input_len,
    )
