"""HTTP surface: generation proxy endpoints plus the workbook API that the
browser UI drives, including the change event stream."""

from __future__ import annotations

import asyncio
import json
import queue
import re
import threading
from pathlib import Path
from typing import Any, Optional, Union

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .engine.cells import CellAddress, GridRange
from .engine.engine import ChangeSet, Engine
from .engine.values import Blank, Error, Image, Number, Pending, Text, Value
from .engine.workbook import (
    DuplicateLabel,
    StaticToken,
    TokenNotFound,
    Workbook,
)
from .formula.nodes import letters_to_col
from .formula.parser import ParseError
from .formula.tokens import LexError
from .functions.model import GenerationKey, KeyValidationError, LlmRequest
from .kit.builders import (
    build_cfg_slider,
    build_seed_grid,
    designate_power_cell,
    expand_template,
    update_power_cell,
)
from .kit.model import (
    DynamicToken,
    GenerativeList,
    KitError,
    LiteralText,
    PowerRole,
    PromptTemplate,
    Slot,
)
from .kit.tokens import regenerate_token
from .proxy.service import InvalidBatch, UpstreamError, UpstreamTimeout
from .runtime import Runtime
from .store.fileformat import (
    FormatError,
    _source_from_json,
    _source_to_json,
    save_workbook,
)
from .store.snapshots import SnapshotNotFound, SnapshotStore

_A1 = re.compile(r"([A-Za-z]{1,3})([0-9]+)")


def parse_a1(sheet: str, text: str) -> CellAddress:
    m = _A1.fullmatch(text)
    if m is None:
        raise HTTPException(400, f"bad cell address {text!r}")
    return CellAddress(sheet, letters_to_col(m.group(1)), int(m.group(2)) - 1)


def parse_a1_range(sheet: str, text: str) -> GridRange:
    parts = text.split(":")
    if len(parts) > 2:
        raise HTTPException(400, f"bad range {text!r}")
    start = parse_a1(sheet, parts[0])
    end = parse_a1(sheet, parts[-1])
    return GridRange(
        sheet,
        min(start.col, end.col),
        min(start.row, end.row),
        max(start.col, end.col),
        max(start.row, end.row),
    )


def value_json(value: Value) -> dict[str, Any]:
    if isinstance(value, Blank):
        return {"kind": "blank"}
    if isinstance(value, Text):
        return {"kind": "text", "text": value.text}
    if isinstance(value, Number):
        return {"kind": "number", "value": value.value}
    if isinstance(value, Image):
        return {
            "kind": "image",
            "id": value.ref.id,
            "url": value.ref.url_or_path,
            "width": value.ref.width,
            "height": value.ref.height,
        }
    if isinstance(value, Pending):
        return {"kind": "pending", "requestId": value.request_id}
    assert isinstance(value, Error)
    return {"kind": "error", "code": value.kind.value, "message": value.message}


def changes_json(changes: ChangeSet) -> list[dict[str, Any]]:
    return [
        {"sheet": addr.sheet, "address": addr.to_a1(), "value": value_json(value)}
        for addr, value in changes
    ]


class TtiBody(BaseModel):
    prompt: str
    seed: int = 0
    cfg: float = 7.0


class LlmMessage(BaseModel):
    role: str
    content: str


class LlmBody(BaseModel):
    messages: list[LlmMessage]
    expects_list: bool = False
    expected_length: Optional[int] = None


class CellEdit(BaseModel):
    sheet: str
    address: str
    input: str


class SheetBody(BaseModel):
    name: str


class SeedGridBody(BaseModel):
    sheet: str
    prompts: str
    seeds: list[int]
    anchor: str
    cfg: Optional[float] = None


class CfgSliderBody(BaseModel):
    sheet: str
    anchor: str
    cfgs: list[float]
    prompt_text: Optional[str] = None
    prompt_ref: Optional[str] = None
    seed: Optional[int] = None
    seed_ref: Optional[str] = None


class TemplateSegment(BaseModel):
    text: Optional[str] = None
    slot: Optional[str] = None


class TemplateBody(BaseModel):
    sheet: str
    anchor: str
    slots: dict[str, dict]
    layout: dict[str, Union[str, int]] = Field(default_factory=dict)
    segments: Optional[list[TemplateSegment]] = None
    seeds: Optional[list[int]] = None
    seed: Optional[int] = None
    cfg: Optional[float] = None


class PowerCellBody(BaseModel):
    sheet: str
    address: str
    role: str
    value: Optional[float] = None
    label: Optional[str] = None


class PowerValueBody(BaseModel):
    value: float


class TokenBody(BaseModel):
    label: Optional[str] = None
    text: Optional[str] = None
    generator: Optional[dict] = None


class MakeDynamicBody(BaseModel):
    function: str = "GPT_LIST"
    input: Optional[str] = None
    length: int = 5


class SaveBody(BaseModel):
    path: Optional[str] = None


class SnapshotBody(BaseModel):
    label: Optional[str] = None


class WorkbookSession:
    """Serves one workbook: engine access, change fan-out, persistence."""

    def __init__(
        self,
        runtime: Runtime,
        path: Path | None = None,
        snapshots_dir: Path | None = None,
    ):
        self.runtime = runtime
        self.path = path
        self.snapshots = SnapshotStore(
            snapshots_dir
            if snapshots_dir is not None
            else (path.parent / "snapshots" if path else Path("snapshots"))
        )
        self._listeners: list[queue.Queue] = []
        self._listener_lock = threading.Lock()
        runtime.engine.add_observer(self._broadcast)

    @property
    def engine(self) -> Engine:
        return self.runtime.engine

    @property
    def workbook(self) -> Workbook:
        return self.engine.workbook

    def _broadcast(self, changes: ChangeSet) -> None:
        payload = {
            "changes": changes_json(changes),
            "pending": len(self.engine.pending_cells()),
        }
        with self._listener_lock:
            listeners = list(self._listeners)
        for listener in listeners:
            listener.put(payload)

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._listener_lock:
            self._listeners.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._listener_lock:
            if q in self._listeners:
                self._listeners.remove(q)

    def swap_workbook(self, workbook: Workbook) -> None:
        engine = Engine(workbook, self.runtime.dispatcher)
        engine.add_observer(self._broadcast)
        self.runtime.engine = engine
        engine.recompute_all()


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, (TokenNotFound, SnapshotNotFound, KeyError)):
        return HTTPException(404, str(exc))
    if isinstance(exc, DuplicateLabel):
        return HTTPException(409, f"duplicate label: {exc}")
    if isinstance(exc, UpstreamTimeout):
        return HTTPException(504, str(exc))
    if isinstance(exc, UpstreamError):
        return HTTPException(502, str(exc))
    if isinstance(
        exc,
        (KitError, FormatError, ParseError, LexError, KeyValidationError,
         InvalidBatch, ValueError),
    ):
        return HTTPException(400, str(exc))
    raise exc


def create_app(
    session: WorkbookSession,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="gensheet", docs_url=None, redoc_url=None)
    service = session.runtime.service
    app.state.session = session

    # -- proxy endpoints ------------------------------------------------------

    @app.post("/tti")
    def tti(body: TtiBody) -> dict:
        try:
            key = GenerationKey(prompt=body.prompt, seed=body.seed, cfg=body.cfg)
        except KeyValidationError as exc:
            raise HTTPException(400, str(exc)) from exc
        try:
            result = service.serve_tti(key)
        except UpstreamTimeout as exc:
            raise HTTPException(504, str(exc)) from exc
        except UpstreamError as exc:
            raise HTTPException(502, str(exc)) from exc
        return {
            "id": result.digest,
            "url": f"/image/{result.digest}",
            "width": result.width,
            "height": result.height,
        }

    @app.post("/llm")
    def llm(body: LlmBody) -> dict:
        try:
            request = LlmRequest(
                messages=tuple((m.role, m.content) for m in body.messages),
                expects_list=body.expects_list,
                expected_length=body.expected_length,
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        try:
            return {"text": service.serve_llm(request)}
        except UpstreamTimeout as exc:
            raise HTTPException(504, str(exc)) from exc
        except (UpstreamError, InvalidBatch) as exc:
            code = 400 if isinstance(exc, InvalidBatch) else 502
            raise HTTPException(code, str(exc)) from exc

    @app.get("/image/{digest}")
    def image(digest: str) -> Response:
        if not re.fullmatch(r"[0-9a-f]{64}", digest):
            raise HTTPException(400, "malformed image id")
        data = service.image_bytes(digest)
        if data is None:
            raise HTTPException(404, "image not cached")
        return Response(content=data, media_type="image/png")

    @app.get("/stats")
    def stats() -> dict:
        return service.cache_stats().as_dict()

    # -- workbook api -----------------------------------------------------------

    @app.get("/api/workbook")
    def get_workbook() -> dict:
        engine = session.engine
        values = engine.values_snapshot()
        sheets: dict[str, list[dict]] = {}
        for name in engine.workbook.sheet_names():
            sheets[name] = []
        for addr, content in engine.workbook.iter_cells():
            record = {
                "address": addr.to_a1(),
                "input": _content_input(content),
                "value": value_json(values.get(addr, Blank())),
            }
            sheets[addr.sheet].append(record)
        # spill children carry values without content
        for addr, value in sorted(
            values.items(), key=lambda kv: (kv[0].sheet, kv[0].row, kv[0].col)
        ):
            if engine.workbook.has_user_content(addr):
                continue
            if isinstance(value, Blank):
                continue
            sheets.setdefault(addr.sheet, []).append(
                {"address": addr.to_a1(), "input": "", "value": value_json(value)}
            )
        return {
            "sheets": sheets,
            "settings": {
                "default_seed": session.workbook.settings.default_seed,
                "default_cfg": session.workbook.settings.default_cfg,
                "providers": session.workbook.settings.providers,
            },
            "powerCells": _power_cells_json(session),
            "tokens": _tokens_json(session),
            "pending": len(engine.pending_cells()),
        }

    @app.post("/api/sheets")
    def add_sheet(body: SheetBody) -> dict:
        try:
            session.workbook.add_sheet(body.name)
        except ValueError as exc:
            raise HTTPException(409, str(exc)) from exc
        return {"sheets": session.workbook.sheet_names()}

    @app.post("/api/cells")
    def set_cell(body: CellEdit) -> dict:
        addr = parse_a1(body.sheet, body.address)
        try:
            changes = session.engine.enter(addr, body.input)
        except (ParseError, LexError) as exc:
            raise HTTPException(400, str(exc)) from exc
        except KeyError as exc:
            raise HTTPException(404, str(exc)) from exc
        return {"changes": changes_json(changes)}

    @app.get("/api/cells/{sheet}/{address}")
    def get_cell(sheet: str, address: str) -> dict:
        addr = parse_a1(sheet, address)
        try:
            value = session.engine.get_value(addr)
        except KeyError as exc:
            raise HTTPException(404, str(exc)) from exc
        return {
            "sheet": sheet,
            "address": addr.to_a1(),
            "input": _content_input(session.workbook.content(addr)),
            "value": value_json(value),
        }

    @app.get("/api/status")
    def status() -> dict:
        return {
            "pending": len(session.engine.pending_cells()),
            "quiescent": session.engine.is_quiescent(),
        }

    @app.get("/api/events")
    async def events(request: Request) -> StreamingResponse:
        channel = session.subscribe()

        async def stream():
            loop = asyncio.get_running_loop()
            try:
                while True:
                    if await request.is_disconnected():
                        return
                    try:
                        payload = await loop.run_in_executor(
                            None, channel.get, True, 1.0
                        )
                    except Exception:
                        yield ": keepalive\n\n"
                        continue
                    yield f"event: changes\ndata: {json.dumps(payload)}\n\n"
            finally:
                session.unsubscribe(channel)

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- kit commands --------------------------------------------------------------

    @app.post("/api/kit/seed-grid")
    def kit_seed_grid(body: SeedGridBody) -> dict:
        try:
            changes = build_seed_grid(
                session.engine,
                parse_a1_range(body.sheet, body.prompts),
                body.seeds,
                parse_a1(body.sheet, body.anchor),
                cfg=body.cfg,
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"changes": changes_json(changes)}

    @app.post("/api/kit/cfg-slider")
    def kit_cfg_slider(body: CfgSliderBody) -> dict:
        prompt: Union[str, CellAddress]
        if body.prompt_ref:
            prompt = parse_a1(body.sheet, body.prompt_ref)
        elif body.prompt_text:
            prompt = body.prompt_text
        else:
            raise HTTPException(400, "prompt_text or prompt_ref required")
        seed: Union[int, CellAddress, None]
        seed = parse_a1(body.sheet, body.seed_ref) if body.seed_ref else body.seed
        try:
            changes = build_cfg_slider(
                session.engine,
                prompt,
                seed,
                body.cfgs,
                parse_a1(body.sheet, body.anchor),
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"changes": changes_json(changes)}

    @app.post("/api/kit/template")
    def kit_template(body: TemplateBody) -> dict:
        try:
            slots = {
                name: _source_from_json(payload, 0)
                for name, payload in body.slots.items()
            }
            if body.segments:
                segments = []
                for seg in body.segments:
                    if seg.slot is not None:
                        segments.append(Slot(seg.slot))
                    elif seg.text is not None:
                        segments.append(LiteralText(seg.text))
                    else:
                        raise HTTPException(400, "segment needs text or slot")
            else:
                segments = [Slot(name) for name in body.slots]
            template = PromptTemplate(segments=tuple(segments), slots=slots)
            changes = expand_template(
                session.engine,
                template,
                dict(body.layout),
                parse_a1(body.sheet, body.anchor),
                seeds=body.seeds if body.seeds is not None else body.seed,
                cfg=body.cfg,
            )
        except HTTPException:
            raise
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"changes": changes_json(changes)}

    @app.post("/api/kit/power-cell")
    def kit_power_cell(body: PowerCellBody) -> dict:
        try:
            role = PowerRole(body.role.lower())
            power = designate_power_cell(
                session.engine,
                parse_a1(body.sheet, body.address),
                role,
                value=body.value,
                label=body.label,
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"powerCells": _power_cells_json(session), "label": power.label}

    @app.get("/api/power-cells")
    def power_cells() -> dict:
        return {"powerCells": _power_cells_json(session)}

    @app.post("/api/power-cells/{label}")
    def set_power_cell(label: str, body: PowerValueBody) -> dict:
        try:
            changes = update_power_cell(session.engine, label, body.value)
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"changes": changes_json(changes)}

    # -- token bank -----------------------------------------------------------------

    @app.get("/api/tokens")
    def tokens() -> dict:
        return {"tokens": _tokens_json(session)}

    @app.post("/api/tokens")
    def add_token(body: TokenBody) -> dict:
        bank = session.workbook.token_bank
        try:
            if body.generator is not None:
                generator = _source_from_json(body.generator, 0)
                if body.label is None:
                    raise HTTPException(400, "dynamic tokens need a label")
                token = DynamicToken(label=body.label, generator=generator)
                token = regenerate_token(token, service=service, engine=session.engine)
                bank.add(token)
            elif body.text is not None:
                bank.add_text(body.text, label=body.label)
            else:
                raise HTTPException(400, "token needs text or a generator")
        except HTTPException:
            raise
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"tokens": _tokens_json(session)}

    @app.post("/api/tokens/{label}/dynamic")
    def make_dynamic(label: str, body: MakeDynamicBody) -> dict:
        bank = session.workbook.token_bank
        try:
            existing = bank.get(label)
            seed_text = body.input
            if seed_text is None and isinstance(existing, StaticToken):
                seed_text = existing.text
            if seed_text is None:
                raise HTTPException(400, "generator input required")
            token = DynamicToken(
                label=label,
                generator=GenerativeList(
                    function=body.function, input=seed_text, length=body.length
                ),
            )
            token = regenerate_token(token, service=service, engine=session.engine)
            bank.replace(label, token)
        except HTTPException:
            raise
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"tokens": _tokens_json(session)}

    @app.post("/api/tokens/{label}/regenerate")
    def regenerate(label: str) -> dict:
        bank = session.workbook.token_bank
        try:
            token = bank.get(label)
            if not isinstance(token, DynamicToken):
                raise HTTPException(400, f"{label!r} is not a dynamic token")
            refreshed = regenerate_token(token, service=service, engine=session.engine)
            bank.replace(label, refreshed)
        except HTTPException:
            raise
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"tokens": _tokens_json(session)}

    @app.delete("/api/tokens/{label}")
    def remove_token(label: str) -> dict:
        try:
            session.workbook.token_bank.remove(label)
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return {"tokens": _tokens_json(session)}

    # -- persistence -----------------------------------------------------------------

    @app.post("/api/workbook/save")
    def save(body: SaveBody) -> dict:
        path = Path(body.path) if body.path else session.path
        if path is None:
            raise HTTPException(400, "no target path for save")
        path.write_bytes(save_workbook(session.workbook))
        return {"path": str(path)}

    @app.get("/api/snapshots")
    def list_snapshots() -> dict:
        return {
            "snapshots": [
                {
                    "sequence": snap.sequence,
                    "label": snap.label,
                    "timestamp": snap.timestamp,
                }
                for snap in session.snapshots.list_snapshots()
            ]
        }

    @app.post("/api/snapshots")
    def take_snapshot(body: SnapshotBody) -> dict:
        snap = session.snapshots.take(session.workbook, body.label)
        return {"sequence": snap.sequence, "label": snap.label}

    @app.post("/api/snapshots/{sequence}/restore")
    def restore_snapshot(sequence: int) -> dict:
        try:
            workbook = session.snapshots.restore(sequence)
        except SnapshotNotFound as exc:
            raise HTTPException(404, f"no snapshot {sequence}") from exc
        session.swap_workbook(workbook)
        return {"restored": sequence}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _content_input(content: object) -> str:
    from .engine.cells import Formula, Literal

    if isinstance(content, Formula):
        return content.source
    if isinstance(content, Literal):
        if isinstance(content.value, str):
            return content.value
        from .formula.nodes import format_number

        return format_number(content.value)
    return ""


def _power_cells_json(session: WorkbookSession) -> list[dict]:
    cells = []
    for label in sorted(session.workbook.power_cells):
        power = session.workbook.power_cells[label]
        value = session.engine.get_value(power.addr)
        cells.append(
            {
                "label": power.label,
                "sheet": power.addr.sheet,
                "address": power.addr.to_a1(),
                "role": power.role.value,
                "value": value_json(value),
            }
        )
    return cells


def _tokens_json(session: WorkbookSession) -> list[dict]:
    records = []
    for token in session.workbook.token_bank.list_tokens():
        if isinstance(token, StaticToken):
            records.append({"label": token.label, "kind": "static", "text": token.text})
        else:
            records.append(
                {
                    "label": token.label,
                    "kind": "dynamic",
                    "generator": _source_to_json(token.generator),
                    "items": list(token.items),
                }
            )
    return records
