import pytest
import requests

from claimspan.annotate import Aligner, AnnotateConfig
from claimspan.corpus import AnnotatedSample, ClaimSpan, NormalizedClaim, PostRecord
from claimspan.errors import (
    ConfigurationError,
    JsonlError,
    TransportError,
    ValidationError,
)
from claimspan.llm import (
    FixtureChatClient,
    HttpChatClient,
    LlmConfig,
    PromptKind,
    SUPPORTED_SHOT_COUNTS,
    build_prompt,
    complete,
    pick_examples,
    run_llm_eval,
)


def post(text="The vaccine is safe.", pid="p1", language="en"):
    return PostRecord(pid, language, "twitter", text)


def lexical_cfg():
    from claimspan.similarity import SimilarityMeasure

    return AnnotateConfig(
        measure=SimilarityMeasure.ROUGE1_F1, aligner=Aligner.LEXICAL
    )


def llm_cfg(tmp_path, **kwargs):
    kwargs.setdefault("model", "test-model")
    kwargs.setdefault("cache_dir", tmp_path / "cache")
    return LlmConfig(**kwargs)


class TestBuildPrompt:
    def test_extract_zero_shot(self):
        assert build_prompt(PromptKind.EXTRACT, post()) == (
            "Extract the central claim\n\nPost: The vaccine is safe."
        )

    def test_identify_zero_shot(self):
        assert build_prompt(PromptKind.IDENTIFY, post()) == (
            "Identify the central claim\n\nPost: The vaccine is safe."
        )

    def test_span_zero_shot(self):
        assert build_prompt(PromptKind.SPAN, post()) == (
            "Extract the central claim span\n\nPost: The vaccine is safe."
        )

    def test_language_kind_names_the_language(self):
        assert build_prompt(PromptKind.LANGUAGE, post(), language_name="Hindi") == (
            "Extract the central claim in Hindi\n\nPost: The vaccine is safe."
        )

    def test_language_kind_requires_language_name(self):
        with pytest.raises(ValidationError):
            build_prompt(PromptKind.LANGUAGE, post())

    def test_examples_render_in_order(self):
        examples = [("A post", "a claim", "English"), ("B post", "b claim", "Tamil")]
        assert build_prompt(PromptKind.IDENTIFY, post("Query"), examples=examples) == (
            "Identify the central claim\n\n"
            "Post: A post\nClaim: a claim\n\n"
            "Post: B post\nClaim: b claim\n\n"
            "Post: Query"
        )

    def test_language_kind_labels_each_example(self):
        examples = [("A post", "a claim", "English")]
        built = build_prompt(
            PromptKind.LANGUAGE, post("Query"), language_name="Tamil", examples=examples
        )
        assert built == (
            "Extract the central claim in Tamil\n\n"
            "Language: English\nPost: A post\nClaim: a claim\n\n"
            "Post: Query"
        )

    def test_non_language_kinds_omit_language_lines(self):
        examples = [("A post", "a claim", "English")]
        for kind in (PromptKind.IDENTIFY, PromptKind.EXTRACT, PromptKind.SPAN):
            assert "Language:" not in build_prompt(kind, post(), examples=examples)

    def test_prompt_ends_with_query_post(self):
        for kind in PromptKind:
            built = build_prompt(kind, post("Tail text"), language_name="English")
            assert built.endswith("Post: Tail text")


class TestLlmConfig:
    def test_defaults(self):
        cfg = LlmConfig(model="m")
        assert cfg.temperature == 0.0
        assert cfg.max_retries == 3
        assert cfg.backoff_base == 0.5

    @pytest.mark.parametrize(
        "field,value",
        [("temperature", -0.1), ("max_retries", -1), ("backoff_base", -0.5)],
    )
    def test_negative_values_rejected(self, field, value):
        with pytest.raises(ValidationError):
            LlmConfig(model="m", **{field: value})

    def test_shot_grid_is_the_documented_one(self):
        assert SUPPORTED_SHOT_COUNTS == (0, 1, 4, 7, 10)


class TestFixtureChatClient:
    def test_recorded_response(self):
        client = FixtureChatClient({"hi": "hello"})
        assert client.send("hi", LlmConfig(model="m")) == "hello"
        assert client.calls == 1

    def test_miss_uses_default(self):
        client = FixtureChatClient({}, default="fallback")
        assert client.send("anything", LlmConfig(model="m")) == "fallback"

    def test_miss_without_default_rejected(self):
        with pytest.raises(ConfigurationError):
            FixtureChatClient({}).send("anything", LlmConfig(model="m"))

    def test_from_file(self, tmp_path):
        path = tmp_path / "fixture.jsonl"
        path.write_text(
            '{"prompt": "p1", "response": "r1"}\n'
            "\n"
            '{"prompt": "p2", "response": "r2"}\n',
            encoding="utf-8",
        )
        client = FixtureChatClient.from_file(path)
        assert client.responses == {"p1": "r1", "p2": "r2"}

    def test_from_file_bad_json_names_line(self, tmp_path):
        path = tmp_path / "fixture.jsonl"
        path.write_text('{"prompt": "p", "response": "r"}\nnot json\n', encoding="utf-8")
        with pytest.raises(JsonlError, match="2"):
            FixtureChatClient.from_file(path)

    def test_from_file_missing_field_rejected(self, tmp_path):
        path = tmp_path / "fixture.jsonl"
        path.write_text('{"prompt": "p"}\n', encoding="utf-8")
        with pytest.raises(JsonlError):
            FixtureChatClient.from_file(path)


class _FlakyClient:
    """Raises TransportError for the first n sends, then succeeds."""

    def __init__(self, failures, response="ok"):
        self.failures = failures
        self.response = response
        self.calls = 0

    def send(self, prompt, cfg):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("flaky")
        return self.response


class TestComplete:
    def test_returns_trimmed_but_caches_raw(self, tmp_path):
        cfg = llm_cfg(tmp_path)
        client = FixtureChatClient({"p": "  spam \n"})
        assert complete(client, "p", cfg) == "spam"
        files = list((tmp_path / "cache").iterdir())
        assert len(files) == 1
        assert files[0].read_text(encoding="utf-8") == "  spam \n"

    def test_cache_hit_skips_client(self, tmp_path):
        cfg = llm_cfg(tmp_path)
        client = FixtureChatClient({"p": "r"})
        complete(client, "p", cfg)
        assert complete(client, "p", cfg) == "r"
        assert client.calls == 1

    def test_model_id_is_part_of_the_cache_key(self, tmp_path):
        client = FixtureChatClient({"p": "r"})
        complete(client, "p", llm_cfg(tmp_path, model="a"))
        complete(client, "p", llm_cfg(tmp_path, model="b"))
        assert client.calls == 2
        assert len(list((tmp_path / "cache").iterdir())) == 2

    def test_empty_prompt_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            complete(FixtureChatClient({}), "", llm_cfg(tmp_path))

    def test_retries_with_exponential_backoff(self, tmp_path, monkeypatch):
        delays = []
        monkeypatch.setattr("claimspan.llm.time.sleep", delays.append)
        client = _FlakyClient(failures=2)
        assert complete(client, "p", llm_cfg(tmp_path)) == "ok"
        assert client.calls == 3
        assert delays == [0.5, 1.0]

    def test_raises_after_retries_exhausted(self, tmp_path, monkeypatch):
        delays = []
        monkeypatch.setattr("claimspan.llm.time.sleep", delays.append)
        client = _FlakyClient(failures=99)
        with pytest.raises(TransportError):
            complete(client, "p", llm_cfg(tmp_path, max_retries=1))
        assert client.calls == 2
        assert delays == [0.5]

    def test_configuration_error_is_not_retried(self, tmp_path, monkeypatch):
        monkeypatch.setattr(
            "claimspan.llm.time.sleep",
            lambda _: pytest.fail("must not sleep on a non-transport error"),
        )
        client = FixtureChatClient({})
        with pytest.raises(ConfigurationError):
            complete(client, "p", llm_cfg(tmp_path))
        assert client.calls == 1

    def test_failed_run_leaves_no_cache_file(self, tmp_path):
        cfg = llm_cfg(tmp_path, max_retries=0)
        with pytest.raises(TransportError):
            complete(_FlakyClient(failures=99), "p", cfg)
        assert not (tmp_path / "cache").exists()


class _FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self.payload = payload

    def json(self):
        if self.payload is None:
            raise ValueError("no json")
        return self.payload


class TestHttpChatClient:
    ENDPOINT = "https://example.invalid/v1/chat/completions"

    def test_empty_endpoint_rejected(self):
        with pytest.raises(ConfigurationError):
            HttpChatClient("")

    def _send(self, monkeypatch, response, env_key=None):
        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen.update(url=url, json=json, headers=headers)
            if isinstance(response, Exception):
                raise response
            return response

        monkeypatch.setattr("claimspan.llm.requests.post", fake_post)
        if env_key is not None:
            monkeypatch.setenv("CLAIMSPAN_API_KEY", env_key)
        else:
            monkeypatch.delenv("CLAIMSPAN_API_KEY", raising=False)
        client = HttpChatClient(self.ENDPOINT)
        result = client.send("the prompt", LlmConfig(model="m", temperature=0.3))
        return result, seen

    def test_extracts_completion_content(self, monkeypatch):
        payload = {"choices": [{"message": {"content": "claim text"}}]}
        result, seen = self._send(monkeypatch, _FakeResponse(200, payload), "sk-x")
        assert result == "claim text"
        assert seen["url"] == self.ENDPOINT
        assert seen["json"]["model"] == "m"
        assert seen["json"]["temperature"] == 0.3
        assert seen["json"]["messages"] == [{"role": "user", "content": "the prompt"}]
        assert seen["headers"]["Authorization"] == "Bearer sk-x"

    def test_no_key_sends_no_auth_header(self, monkeypatch):
        payload = {"choices": [{"message": {"content": "x"}}]}
        _, seen = self._send(monkeypatch, _FakeResponse(200, payload))
        assert "Authorization" not in seen["headers"]

    @pytest.mark.parametrize("status", [401, 403])
    def test_auth_failure_is_configuration_error(self, monkeypatch, status):
        with pytest.raises(ConfigurationError):
            self._send(monkeypatch, _FakeResponse(status))

    def test_server_error_is_transport_error(self, monkeypatch):
        with pytest.raises(TransportError):
            self._send(monkeypatch, _FakeResponse(503))

    def test_connection_failure_is_transport_error(self, monkeypatch):
        with pytest.raises(TransportError):
            self._send(monkeypatch, requests.ConnectionError("refused"))

    def test_malformed_body_is_transport_error(self, monkeypatch):
        with pytest.raises(TransportError):
            self._send(monkeypatch, _FakeResponse(200, {"choices": []}))


def sample(pid, text, start, end, language="en"):
    return AnnotatedSample(
        PostRecord(pid, language, "twitter", text), (ClaimSpan(start, end),)
    )


class TestPickExamples:
    def _train(self):
        return [
            sample("t1", "Water is wet. Trust me.", 0, 12),
            sample("t2", "Fire is hot. Indeed.", 0, 11, language="hi"),
            sample("t3", "Snow is cold. Yes.", 0, 12),
            sample("t4", "Wind is air. Hm.", 0, 11),
        ]

    def test_deterministic_for_a_seed(self):
        a = pick_examples(self._train(), 2, seed=13)
        b = pick_examples(self._train(), 2, seed=13)
        assert a == b and len(a) == 2

    def test_different_seeds_can_differ(self):
        picked = {tuple(pick_examples(self._train(), 2, seed=s)) for s in range(8)}
        assert len(picked) > 1

    def test_triples_carry_text_span_and_language_name(self):
        triples = pick_examples(self._train()[:1], 1)
        assert triples == [("Water is wet. Trust me.", "Water is wet", "English")]

    def test_unknown_language_falls_back_to_code(self):
        triples = pick_examples(self._train()[:1], 1, language_names={})
        assert triples[0][2] == "en"

    def test_spanless_samples_skipped(self):
        spanless = AnnotatedSample(PostRecord("t0", "en", "twitter", "Hello."), ())
        triples = pick_examples([spanless] + self._train(), 4)
        assert all(t[0] != "Hello." for t in triples)

    def test_insufficient_pool_rejected(self):
        with pytest.raises(ConfigurationError, match="need 9"):
            pick_examples(self._train(), 9)


class TestRunLlmEval:
    def _gold(self):
        return [
            sample("g1", "Water is wet. Trust me.", 0, 12),
            sample("g2", "Ignore this. The moon orbits the earth. Really.", 13, 38),
        ]

    def _echo_client(self, kind=PromptKind.EXTRACT, examples=()):
        responses = {}
        for item in self._gold():
            prompt = build_prompt(
                kind, item.post, language_name="English", examples=examples
            )
            responses[prompt] = item.span_texts()[0]
        return FixtureChatClient(responses)

    def test_echoed_gold_scores_perfectly(self, tmp_path):
        result = run_llm_eval(
            self._gold(),
            PromptKind.EXTRACT,
            0,
            self._echo_client(),
            lexical_cfg(),
            llm_cfg(tmp_path),
        )
        assert result.precision == 1.0
        assert result.recall == 1.0
        assert result.f1 == 1.0

    def test_empty_responses_score_zero(self, tmp_path):
        client = FixtureChatClient({}, default="")
        result = run_llm_eval(
            self._gold(), PromptKind.EXTRACT, 0, client, lexical_cfg(), llm_cfg(tmp_path)
        )
        assert result.precision == 0.0
        assert result.recall == 0.0

    def test_unalignable_responses_score_zero(self, tmp_path):
        client = FixtureChatClient({}, default="zebra quantum flux")
        result = run_llm_eval(
            self._gold(), PromptKind.EXTRACT, 0, client, lexical_cfg(), llm_cfg(tmp_path)
        )
        assert result.f1 == 0.0

    def test_rerun_is_served_entirely_from_cache(self, tmp_path):
        cfg = llm_cfg(tmp_path)
        first = run_llm_eval(
            self._gold(), PromptKind.EXTRACT, 0, self._echo_client(), lexical_cfg(), cfg
        )
        # a client with no recorded responses would fail on any real send
        cold = FixtureChatClient({})
        second = run_llm_eval(
            self._gold(), PromptKind.EXTRACT, 0, cold, lexical_cfg(), cfg
        )
        assert cold.calls == 0
        assert second == first

    def test_examples_flow_into_prompts(self, tmp_path):
        train = [sample("t1", "Fire is hot. Indeed.", 0, 11)]
        examples = pick_examples(train, 1)
        client = self._echo_client(examples=tuple(examples))
        result = run_llm_eval(
            self._gold(),
            PromptKind.EXTRACT,
            1,
            client,
            lexical_cfg(),
            llm_cfg(tmp_path),
            train=train,
        )
        assert result.f1 == 1.0

    def test_negative_k_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            run_llm_eval(
                self._gold(), PromptKind.EXTRACT, -1,
                FixtureChatClient({}), lexical_cfg(), llm_cfg(tmp_path),
            )

    def test_positive_k_requires_train(self, tmp_path):
        with pytest.raises(ConfigurationError):
            run_llm_eval(
                self._gold(), PromptKind.EXTRACT, 1,
                FixtureChatClient({}), lexical_cfg(), llm_cfg(tmp_path),
            )
