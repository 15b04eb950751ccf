"""Validates CLI output documents and a running `webtlr serve` against schemas/v1."""

import argparse
import json
import pathlib
import socket
import subprocess
import sys
import tempfile
import time

import jsonschema
import requests
from referencing import Registry, Resource

PROPERTY = "[]~(curPage(bidAlfred,Admin)/\\curPage(bidAnna,Admin))"
PATTERN = "B(?,_,?,_,_,_,_,_,_)"


def load_registry(schema_dir):
    schemas = {}
    for path in sorted(schema_dir.glob("*.schema.json")):
        doc = json.loads(path.read_text())
        jsonschema.Draft202012Validator.check_schema(doc)
        schemas[path.name[: -len(".schema.json")]] = doc
    registry = Registry().with_resources((doc["$id"], Resource.from_contents(doc)) for doc in schemas.values())
    return schemas, registry


class Checker:
    def __init__(self, schema_dir):
        self.schemas, self.registry = load_registry(schema_dir)
        self.count = 0

    def validate(self, name, doc):
        validator = jsonschema.Draft202012Validator(self.schemas[name], registry=self.registry)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        if errors:
            raise AssertionError(f"{name}: {errors[0].message} at {list(errors[0].path)}")
        self.count += 1


def run(cli, cwd, *args, expect):
    proc = subprocess.run([cli, *args], cwd=cwd, capture_output=True, text=True)
    if proc.returncode != expect:
        raise AssertionError(f"{args[0]} exited {proc.returncode}, expected {expect}: {proc.stderr}")
    return proc.stdout


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def check_cli(c, cli, corpus, work):
    buggy = str(corpus / "forum-buggy.nav")
    c.validate("verdict", json.loads(run(cli, work, "check", buggy, "--prop", PROPERTY, "--format", "json", expect=1)))
    c.validate("trace", json.loads((work / "forum-buggy.trace.json").read_text()))
    summary = json.loads(run(cli, work, "slice", "forum-buggy.trace.json", "last", PATTERN, "--format", "json", expect=0))
    c.validate("slice-summary", summary)
    assert summary["final_window"]["reduction"] >= 0.85
    c.validate("sliced-trace", json.loads((work / "forum-buggy.slice.json").read_text()))
    c.validate("graph", json.loads(run(cli, work, "render-graph", buggy, "--format", "json", expect=0)))
    report = json.loads(run(cli, work, "replay-verify", "forum-buggy.slice.json", "--samples", "5", "--format", "json", expect=0))
    c.validate("replay", report)
    (work / "bad.nav").write_text("page Home {\n  links { true -> ;\n}\n")
    c.validate("error", json.loads(run(cli, work, "check", "bad.nav", "--prop", "true", "--format", "json", expect=3)))
    fixed = json.loads(run(cli, work, "check", str(corpus / "forum-fixed.nav"), "--prop", PROPERTY,
                           "--budget-states", "100", "--format", "json", expect=2))
    c.validate("verdict", fixed)


def check_rejects(c):
    """The schemas are not vacuous: malformed documents are rejected."""
    bad = [
        ("verdict", {"format": "webtlr-verdict/1", "verdict": "maybe"}),
        ("state", {"format": "webtlr-state/1"}),
        ("error", {"error": {"code": "oops", "exit_status": 3, "message": ""}}),
    ]
    for name, doc in bad:
        try:
            c.validate(name, doc)
        except AssertionError:
            continue
        raise AssertionError(f"{name} accepted a malformed document")
    position = {"$ref": "urn:webtlr:schema:v1:common#/$defs/position"}
    validator = jsonschema.Draft202012Validator(position, registry=c.registry)
    assert validator.is_valid("Λ.1.2") and not validator.is_valid("1.0") and not validator.is_valid("Λ.")


def check_server(c, cli, corpus, work):
    port = free_port()
    server = subprocess.Popen([cli, "serve", "--port", str(port), "--store", str(work / "store")],
                              stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    base = f"http://127.0.0.1:{port}/api/v1"
    try:
        for _ in range(200):
            try:
                requests.get(base + "/health", timeout=1)
                break
            except requests.ConnectionError:
                time.sleep(0.05)
        spec = (corpus / "forum-buggy.nav").read_text()
        job = requests.post(base + "/checks", json={"spec": spec, "property": PROPERTY}).json()
        c.validate("check-job", job)
        for _ in range(1200):
            if job["status"] != "running":
                break
            time.sleep(0.05)
            job = requests.get(base + "/checks/" + job["job_id"]).json()
        c.validate("check-job", job)
        trace_id = job["result"]["trace_id"]
        document = requests.get(f"{base}/traces/{trace_id}/document").text
        assert document == (work / "forum-buggy.trace.json").read_text(), "stored trace differs from the CLI trace"
        c.validate("trace-summary", requests.get(f"{base}/traces/{trace_id}").json())
        c.validate("state", requests.get(f"{base}/traces/{trace_id}/states/last").json())
        c.validate("state", requests.get(f"{base}/traces/{trace_id}/states/0").json())
        sliced = requests.post(base + "/slices", json={"traceId": trace_id, "stateIndex": "last", "pattern": PATTERN})
        assert sliced.text == (work / "forum-buggy.slice.json").read_text(), "API slice differs from the CLI slice"
        c.validate("sliced-trace", sliced.json())
        c.validate("graph", requests.get(f"{base}/traces/{trace_id}/graph").json())
        c.validate("graph", requests.post(base + "/graph", json={"spec": spec}).json())
        c.validate("store-index", requests.get(base + "/traces").json())
        missing = requests.get(base + "/traces/0123456789abcdef")
        assert missing.status_code == 404
        c.validate("error", missing.json())
        bad = requests.post(base + "/slices", json={"traceId": trace_id, "stateIndex": 0, "pattern": "_"})
        assert bad.status_code == 400
        c.validate("error", bad.json())
    finally:
        server.terminate()
        server.wait(timeout=10)
    c.validate("store-index", json.loads((work / "store" / "index.json").read_text()))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--corpus", required=True, type=pathlib.Path)
    ap.add_argument("--schemas", required=True, type=pathlib.Path)
    args = ap.parse_args()
    c = Checker(args.schemas)
    with tempfile.TemporaryDirectory(prefix="webtlr-schemas-") as tmp:
        work = pathlib.Path(tmp)
        check_rejects(c)
        check_cli(c, args.cli, args.corpus, work)
        check_server(c, args.cli, args.corpus, work)
    print(f"{c.count} documents valid against {len(c.schemas)} schemas")
    return 0


if __name__ == "__main__":
    sys.exit(main())
