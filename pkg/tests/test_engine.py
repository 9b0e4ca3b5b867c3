"""Grid engine: evaluation, propagation, cycles, and change sets."""

import pytest

from gensheet.engine import (
    BLANK,
    CellAddress,
    CollectingDispatcher,
    Engine,
    Error,
    ErrorKind,
    Image,
    Number,
    Pending,
    Text,
    Workbook,
)


def addr(a1, sheet="Sheet1"):
    from gensheet.formula.nodes import letters_to_col
    import re

    m = re.fullmatch(r"([A-Za-z]+)([0-9]+)", a1)
    return CellAddress(sheet, letters_to_col(m.group(1)), int(m.group(2)) - 1)


class TestBasicEvaluation:
    def test_direct_reference(self, engine):
        engine.enter(addr("A1"), "hello")
        engine.enter(addr("A2"), "=A1")
        assert engine.get_value(addr("A2")) == Text("hello")

    def test_blank_for_empty(self, engine):
        assert engine.get_value(addr("Z99")) == BLANK

    def test_number_literal_and_arithmetic(self, engine):
        engine.enter(addr("A1"), "2")
        engine.enter(addr("A2"), "=A1*3+1")
        assert engine.get_value(addr("A2")) == Number(7.0)

    def test_concat_number_formatting(self, engine):
        engine.enter(addr("A1"), "3424")
        engine.enter(addr("A2"), '="seed "&A1')
        assert engine.get_value(addr("A2")) == Text("seed 3424")

    def test_blank_concats_as_empty(self, engine):
        engine.enter(addr("A2"), '="x"&A1&"y"')
        assert engine.get_value(addr("A2")) == Text("xy")

    def test_unknown_function_is_name_error(self, engine):
        engine.enter(addr("A1"), "=UNKNOWN_FN()")
        value = engine.get_value(addr("A1"))
        assert isinstance(value, Error) and value.kind is ErrorKind.NAME

    def test_division_by_zero(self, engine):
        engine.enter(addr("A1"), "=1/0")
        value = engine.get_value(addr("A1"))
        assert isinstance(value, Error) and value.kind is ErrorKind.VALUE

    def test_error_propagates_through_expressions(self, engine):
        engine.enter(addr("A1"), "=1/0")
        engine.enter(addr("A2"), '="x"&A1')
        value = engine.get_value(addr("A2"))
        assert isinstance(value, Error) and value.kind is ErrorKind.VALUE

    def test_ref_error_node(self, engine):
        engine.enter(addr("A1"), "=#REF!")
        value = engine.get_value(addr("A1"))
        assert isinstance(value, Error) and value.kind is ErrorKind.REF

    def test_unknown_sheet_reference(self, engine):
        engine.enter(addr("A1"), "=missing!B2")
        value = engine.get_value(addr("A1"))
        assert isinstance(value, Error) and value.kind is ErrorKind.REF

    def test_update_propagates(self, engine):
        engine.enter(addr("A1"), "1")
        engine.enter(addr("A2"), "=A1+1")
        engine.enter(addr("A3"), "=A2+1")
        changes = engine.enter(addr("A1"), "10")
        changed = {a.to_a1(): v for a, v in changes}
        assert changed == {
            "A1": Number(10.0),
            "A2": Number(11.0),
            "A3": Number(12.0),
        }

    def test_changeset_lists_only_changed(self, engine):
        engine.enter(addr("A1"), "1")
        engine.enter(addr("A2"), "=A1*0")
        changes = engine.enter(addr("A1"), "2")
        assert [a.to_a1() for a, _ in changes] == ["A1"]

    def test_clear_cell(self, engine):
        engine.enter(addr("A1"), "x")
        changes = engine.enter(addr("A1"), "")
        assert changes == [(addr("A1"), BLANK)]

    def test_get_value_unknown_sheet_raises(self, engine):
        with pytest.raises(KeyError):
            engine.get_value(CellAddress("nope", 0, 0))


class TestCycles:
    def test_two_cycle(self, engine):
        engine.enter(addr("A1"), "=A2")
        engine.enter(addr("A2"), "=A1")
        for a1 in ("A1", "A2"):
            value = engine.get_value(addr(a1))
            assert isinstance(value, Error) and value.kind is ErrorKind.CYCLE

    def test_self_cycle(self, engine):
        engine.enter(addr("A1"), "=A1")
        value = engine.get_value(addr("A1"))
        assert isinstance(value, Error) and value.kind is ErrorKind.CYCLE

    def test_downstream_of_cycle_propagates(self, engine):
        engine.enter(addr("A1"), "=A2")
        engine.enter(addr("A2"), "=A1")
        # A3 is not on the cycle; it propagates the cycle error as a value
        engine.enter(addr("A3"), "=A1")
        assert engine.get_value(addr("A3")).kind is ErrorKind.CYCLE

    def test_breaking_cycle_recovers(self, engine):
        engine.enter(addr("A1"), "=A2")
        engine.enter(addr("A2"), "=A1")
        engine.enter(addr("A2"), "5")
        assert engine.get_value(addr("A1")) == Number(5.0)
        assert engine.get_value(addr("A2")) == Number(5.0)

    def test_longer_cycle(self, engine):
        engine.enter(addr("A1"), "=A3+1")
        engine.enter(addr("A2"), "=A1+1")
        engine.enter(addr("A3"), "=A2+1")
        for a1 in ("A1", "A2", "A3"):
            assert engine.get_value(addr(a1)).kind is ErrorKind.CYCLE


class TestGenerativeCells:
    def test_tti_produces_image(self, engine):
        engine.enter(addr("B1"), "3424")
        engine.enter(addr("C2"), '=TTI("portrait of a woman", B1)')
        value = engine.get_value(addr("C2"))
        assert isinstance(value, Image)
        first_id = value.ref.id
        # seed change re-keys the image
        engine.enter(addr("B1"), "4244")
        value2 = engine.get_value(addr("C2"))
        assert isinstance(value2, Image) and value2.ref.id != first_id

    def test_empty_prompt_is_value_error(self, engine):
        engine.enter(addr("A1"), '=TTI("")')
        assert engine.get_value(addr("A1")).kind is ErrorKind.VALUE

    def test_whitespace_prompt_rejected(self, engine):
        engine.enter(addr("A1"), '=EMBELLISH("   ")')
        assert engine.get_value(addr("A1")).kind is ErrorKind.VALUE

    def test_gpt_echo(self, engine):
        engine.enter(addr("A1"), '=GPT("hi")')
        assert engine.get_value(addr("A1")) == Text("GPT(hi)")

    def test_embellish_echo(self, engine):
        engine.enter(addr("A1"), '=EMBELLISH("cat")')
        assert engine.get_value(addr("A1")) == Text("EMBELLISH(cat)")

    def test_image_display_cell(self, engine):
        engine.enter(addr("A1"), '=TTI("cat", 1)')
        engine.enter(addr("A2"), "=IMAGE(A1)")
        assert engine.get_value(addr("A2")) == engine.get_value(addr("A1"))

    def test_image_of_text_is_value_error(self, engine):
        engine.enter(addr("A1"), '=IMAGE("x")')
        assert engine.get_value(addr("A1")).kind is ErrorKind.VALUE

    def test_identical_calls_share_one_dispatch(self, service, engine):
        calls = []
        original = service.tti_upstream
        service.tti_upstream = lambda key: (calls.append(key), original(key))[1]
        engine.enter(addr("A1"), '=TTI("cat", 7)')
        engine.enter(addr("B1"), '=TTI("cat", 7)')
        assert engine.get_value(addr("A1")) == engine.get_value(addr("B1"))
        assert len(calls) == 1

    def test_seed_must_be_integer(self, engine):
        engine.enter(addr("A1"), '=TTI("cat", 1.5)')
        assert engine.get_value(addr("A1")).kind is ErrorKind.VALUE

    def test_cfg_precision_rejected(self, engine):
        engine.enter(addr("A1"), '=TTI("cat", 1, 7.05)')
        assert engine.get_value(addr("A1")).kind is ErrorKind.VALUE

    def test_nested_pending_propagates(self, service):
        workbook = Workbook()
        workbook.add_sheet("Sheet1")
        collector = CollectingDispatcher()
        engine = Engine(workbook, collector)
        engine.enter(addr("A1"), '=GPT("subject")')
        engine.enter(addr("A2"), '=TTI(A1, 1)')
        assert isinstance(engine.get_value(addr("A1")), Pending)
        assert isinstance(engine.get_value(addr("A2")), Pending)

    def test_omitted_seed_and_cfg_use_defaults(self, engine):
        from gensheet.functions.model import GenerationKey

        engine.enter(addr("A1"), '=TTI("cat")')
        value = engine.get_value(addr("A1"))
        assert value.ref.id == GenerationKey("cat", 0, 7.0).digest()

    def test_workbook_settings_override_defaults(self, service):
        from gensheet.engine import SyncDispatcher
        from gensheet.functions.model import GenerationKey, WorkbookSettings

        workbook = Workbook(WorkbookSettings(default_seed=7935, default_cfg=9.5))
        workbook.add_sheet("Sheet1")
        engine = Engine(workbook, SyncDispatcher(service))
        engine.enter(addr("A1"), '=TTI("cat")')
        value = engine.get_value(addr("A1"))
        assert value.ref.id == GenerationKey("cat", 7935, 9.5).digest()
