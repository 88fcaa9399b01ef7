"""Line-oriented environment server: one JSON object per line on stdin/stdout.

Requests carry an integer ``id`` echoed in the response.  Commands:

  {"id", "cmd": "spec"}                      -> action space + observation dims
  {"id", "cmd": "reset", "seed"?, "scenario"?} -> observation + info
  {"id", "cmd": "step", "action"}            -> obs/reward/terminated/truncated/info
  {"id", "cmd": "render", "path"}            -> writes a PNG of the current state
  {"id", "cmd": "close"}                     -> acknowledges and exits

Malformed requests produce {"id", "error": {"code", "message"}} and the
process keeps serving.  One environment per process.
"""

from __future__ import annotations

import json
import sys
from typing import Any, TextIO

from .env import ActionOutOfRange, EpisodeOver, LayoutEnv
from .obs import Observation
from .scenario import Scenario, get_scenario


def _obs_payload(obs: Observation, obs_mode: str) -> dict[str, Any]:
    key = "features" if obs_mode == "features" else "image"
    return {
        key: obs.layout.astype(float).flatten().tolist()
        if obs_mode == "features" else obs.layout.tolist(),
        "context": obs.context.astype(float).tolist(),
    }


class EnvServer:
    def __init__(self, scenario: Scenario, obs_mode: str = "features", context: bool = True):
        self.scenario = scenario
        self.obs_mode = obs_mode
        self.context_on = context
        self.env = LayoutEnv(scenario, obs_mode, context)

    def handle(self, request: dict[str, Any]) -> tuple[dict[str, Any], bool]:
        """(response, keep_running)."""
        rid = request.get("id")
        if not isinstance(rid, int):
            return self._error(None, "bad_request", "missing integer 'id'"), True
        cmd = request.get("cmd")
        try:
            if cmd == "spec":
                return {
                    "id": rid,
                    "scenario": self.env.scenario.name,
                    "action_space": self.env.action_count,
                    "obs_dims": self.env.obs_dims(),
                    "n_rooms": self.env.scenario.n_rooms,
                    "grid": {"width": self.env.scenario.grid.width,
                             "height": self.env.scenario.grid.height},
                }, True
            if cmd == "reset":
                if "scenario" in request:
                    scenario = get_scenario(str(request["scenario"]))
                    self.env = LayoutEnv(scenario, self.obs_mode, self.context_on)
                obs, info = self.env.reset(seed=request.get("seed"))
                return {"id": rid, "obs": _obs_payload(obs, self.obs_mode), "info": info}, True
            if cmd == "step":
                action = request.get("action")
                if not isinstance(action, int):
                    return self._error(rid, "bad_request", "'action' must be an integer"), True
                result = self.env.step(action)
                info = {"accepted": result.info.get("accepted", False)}
                if "reject_reason" in result.info:
                    info["reason"] = result.info["reject_reason"]
                for key in ("rooms_so_far", "missed_adjacencies", "hash"):
                    if key in result.info:
                        info[key] = result.info[key]
                return {
                    "id": rid,
                    "obs": _obs_payload(result.obs, self.obs_mode),
                    "reward": result.reward,
                    "terminated": result.terminated,
                    "truncated": result.truncated,
                    "info": info,
                }, True
            if cmd == "render":
                path = request.get("path")
                if not isinstance(path, str) or not path:
                    return self._error(rid, "bad_request", "'path' must be a string"), True
                try:
                    from .render import render_env
                    render_env(self.env, path)
                except OSError as e:
                    return self._error(rid, "render_failed", str(e)), True
                return {"id": rid, "ok": True, "path": path}, True
            if cmd == "close":
                return {"id": rid, "ok": True}, False
            return self._error(rid, "bad_request", f"unknown command {cmd!r}"), True
        except ActionOutOfRange as e:
            return self._error(rid, "out_of_range", str(e)), True
        except EpisodeOver as e:
            return self._error(rid, "episode_over", str(e)), True
        except KeyError as e:
            return self._error(rid, "bad_request", str(e)), True

    @staticmethod
    def _error(rid: int | None, code: str, message: str) -> dict[str, Any]:
        return {"id": rid, "error": {"code": code, "message": message}}


def serve_stdio(scenario: Scenario, obs_mode: str = "features", context: bool = True,
                stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    server = EnvServer(scenario, obs_mode, context)
    try:
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
                if not isinstance(request, dict):
                    raise ValueError("request must be a JSON object")
            except ValueError as e:
                response, running = EnvServer._error(
                    None, "bad_request", f"malformed line: {e}"), True
            else:
                response, running = server.handle(request)
            stdout.write(json.dumps(response) + "\n")
            stdout.flush()
            if not running:
                return 0
    except BrokenPipeError:
        # the client went away; nothing left to serve
        return 0
    return 0
