"""Drive the HTTP API end to end, in process, with the test client.

The same flow works over the network: start a server with
`phrasesynth serve --port 8000 --checkpoint <ckpt>` and replace the
client calls with plain HTTP requests.
"""

import io
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from phrasesynth import build_dataset, save_checkpoint, write_midi
from phrasesynth.service import ServiceConfig, create_app
from phrasesynth.synthetic import make_corpus, melody_score, overfit_configs
from phrasesynth.training import train_loop

with tempfile.TemporaryDirectory() as workdir:
    workdir = Path(workdir)
    _, entries = make_corpus(workdir)
    pairs, labels = build_dataset(entries)
    contour_cfg, texture_cfg, train_cfg = overfit_configs(
        len(labels), steps=50)
    ckpt, _ = train_loop(pairs, labels, contour_cfg, texture_cfg, train_cfg)
    ckpt_path = workdir / "demo.ckpt"
    save_checkpoint(ckpt, ckpt_path)

    app = create_app(ServiceConfig(checkpoint_paths=[ckpt_path],
                                   gl_iterations=30))
    with TestClient(app) as client:
        instruments = client.get("/api/instruments").json()
        print("instruments:", instruments)

        smf = write_midi(melody_score(pitches=(91, 95, 93), note_duration_s=0.5))
        upload = client.post("/api/scores", files={
            "file": ("phrase.mid", io.BytesIO(smf), "audio/midi")}).json()
        score_id = upload["id"]
        print(f"uploaded score {score_id[:8]}..., "
              f"{len(upload['pianoroll']['notes'])} note span(s)")

        # edit: transpose the first span up an octave, like a grid click
        roll = upload["pianoroll"]
        roll["notes"][0]["pitch"] += 12
        assert client.put(f"/api/scores/{score_id}/pianoroll",
                          json=roll).status_code == 204
        print("edited the roll via PUT")

        job_id = client.post("/api/synthesize", json={
            "score_id": score_id,
            "instrument_label": instruments[0]["label"],
        }).json()["job_id"]
        while True:
            job = client.get(f"/api/jobs/{job_id}").json()
            if job["state"] in ("done", "failed"):
                break
            time.sleep(0.1)
        print(f"job {job_id[:8]}... finished: {job['state']}")

        audio = client.get(f"/api/jobs/{job_id}/audio")
        out = Path("demo-output")
        out.mkdir(exist_ok=True)
        (out / "service-render.wav").write_bytes(audio.content)
        print(f"downloaded {len(audio.content)} bytes "
              f"-> demo-output/service-render.wav")
