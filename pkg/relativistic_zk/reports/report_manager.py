# Report Manager - session JSON/CSV files, phase-time histograms and the offline re-check
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from ..audit.session_auditor import (RoundTranscript, SessionReport, V1RoundRecord, V2RoundRecord, recheck_messages,
                                     recheck_rows)
from ..coding.syndrome import SdInstance
from ..config import env_out_dir
from ..field.fq import FieldParams
from ..stern.stern_protocol import Phase2Message, VerdictReason

logger = logging.getLogger(__name__)

SESSION_COLUMNS = ["round", "tau1_ns", "theta1_ns", "tau2_ns", "theta2_ns", "phase1_us", "phase2_us", "timing_ok",
                   "challenge", "verdict_reason"]
HISTOGRAM_COLUMNS = ["bucket_start_us", "count"]
# nanosecond epochs do not survive a float round trip
CSV_DTYPES = {"round": "Int64", "tau1_ns": "Int64", "theta1_ns": "Int64", "tau2_ns": "Int64", "theta2_ns": "Int64",
              "challenge": "Int64", "verdict_reason": str}


class ReportError(ValueError):
    """Raised when a saved report cannot be read back"""


def session_frame(report: SessionReport) -> pd.DataFrame:
    frame = pd.DataFrame([r.row() for r in report.rounds], columns=SESSION_COLUMNS)
    for column in ("theta1_ns", "theta2_ns", "challenge"):
        frame[column] = frame[column].astype("Int64")
    return frame


def histogram_frame(report: SessionReport, phase: int, bucket_us: int) -> pd.DataFrame:
    counts = report.phase_histogram(phase, bucket_us)
    return pd.DataFrame(sorted(counts.items()), columns=HISTOGRAM_COLUMNS)


def bucket_times(times_us, bucket_us: int) -> pd.DataFrame:
    """Histogram of raw microsecond timings in fixed-width buckets"""
    series = pd.Series(times_us, dtype=float).dropna()
    starts = (series // bucket_us * bucket_us).astype(int)
    counts = starts.value_counts().sort_index()
    return pd.DataFrame({"bucket_start_us": counts.index.astype(int), "count": counts.values.astype(int)})


def message_entry(transcript: RoundTranscript) -> Dict[str, Any]:
    """Both verifiers' records for one round, as sent in the REPORT exchange"""
    malformed = transcript.verdict.reason is VerdictReason.BAD_COMMITMENT and transcript.verdict.index is None
    v1 = V1RoundRecord(transcript.i, transcript.tau1, transcript.theta1, transcript.B, transcript.Y,
                       malformed=malformed and transcript.Y is None)
    v2 = V2RoundRecord(transcript.i, transcript.tau2, transcript.theta2, Phase2Message(transcript.c or 1),
                       transcript.AZ, malformed=malformed and transcript.AZ is None)
    return {"i": transcript.i, "v1": v1.to_dict(), "v2": v2.to_dict()}


def params_from_echo(config: Dict[str, Any]) -> FieldParams:
    n = int(config["n"])
    q = config.get("q_exponent")
    return FieldParams.for_code_length(n) if q is None else FieldParams.mersenne(int(q), n_embed=n)


class ReportManager:
    """Writes and reads session artefacts under one output directory"""

    def __init__(self, out_dir: Optional[Union[str, Path]] = None):
        self.out_dir = Path(out_dir or env_out_dir())
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Report manager initialized at {self.out_dir}")

    def store_session(self, report: SessionReport, bucket_us: int = 10, include_messages: bool = True) -> Path:
        """session_<role>.json plus the CSV and the two histogram CSVs next to it"""
        frame = session_frame(report)
        csv_text = frame.to_csv(index=False)
        envelope = {
            "role": report.role,
            "config": report.config,
            **report.summary(),
            "alarms": report.alarms,
            "csv": csv_text,
        }
        if include_messages:
            envelope["messages"] = [message_entry(r) for r in report.rounds]
        stem = f"session_{report.role}"
        path = self.out_dir / f"{stem}.json"
        try:
            path.write_text(json.dumps(envelope, indent=1))
            (self.out_dir / f"{stem}.csv").write_text(csv_text)
            for phase in (1, 2):
                histogram_frame(report, phase, bucket_us).to_csv(
                    self.out_dir / f"{stem}_phase{phase}_hist.csv", index=False)
        except OSError as e:
            logger.error(f"Report storage error: {e}")
            raise
        logger.info(f"Stored {report.role} session report ({len(report.rounds)} rounds) at {path}")
        return path

    def store_table(self, frame: pd.DataFrame, name: str) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False)
        logger.info(f"Stored {len(frame)} rows at {path}")
        return path

    def plot_histogram(self, frame: pd.DataFrame, title: str, name: str, budget_us: Optional[float] = None) -> Path:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(8, 4))
        if not frame.empty:
            width = float(frame["bucket_start_us"].diff().min()) if len(frame) > 1 else 10.0
            ax.bar(frame["bucket_start_us"], frame["count"], width=width, align="edge")
        if budget_us is not None:
            ax.axvline(budget_us, color="red", linestyle="--", label="budget")
            ax.legend()
        ax.set_xlabel("time (us)")
        ax.set_ylabel("rounds")
        ax.set_title(title)
        path = self.out_dir / name
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        return path

    @staticmethod
    def load_session(path: Union[str, Path]) -> Dict[str, Any]:
        try:
            envelope = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ReportError(f"cannot read report {path}: {e}") from e
        if "csv" not in envelope or "config" not in envelope:
            raise ReportError(f"{path} is not a session report")
        envelope["rows"] = pd.read_csv(io.StringIO(envelope["csv"]), dtype=CSV_DTYPES)
        return envelope

    def verify_report(self, path: Union[str, Path], instance: Optional[SdInstance] = None) -> Dict[str, Any]:
        """Recompute the verdict from a saved report; with the instance, re-run every round's check"""
        envelope = self.load_session(path)
        config = envelope["config"]
        frame = envelope["rows"].astype(object).where(envelope["rows"].notna(), None)
        rows: List[Dict[str, Any]] = frame.to_dict("records")
        recomputed = recheck_rows(rows, float(config["preset"]["D_km"]), int(config["allowed_losses"]))
        result = {
            "saved_accepted": bool(envelope["accepted"]),
            "accepted": recomputed["accepted"],
            "F_observed": recomputed["F_observed"],
            "allowed_losses": int(config["allowed_losses"]),
            "timing_mismatches": [int(row["round"]) for row, ok in zip(rows, recomputed["timing_ok"])
                                  if bool(row["timing_ok"]) != ok],
            "verdict_mismatches": [],
        }
        if instance is not None and envelope.get("messages"):
            verdicts = recheck_messages(instance, params_from_echo(config), envelope["messages"])
            result["verdict_mismatches"] = [int(row["round"]) for row, v in zip(rows, verdicts)
                                            if str(row["verdict_reason"]) != v.label()]
        result["consistent"] = (result["saved_accepted"] == result["accepted"] and not result["timing_mismatches"]
                                and not result["verdict_mismatches"])
        level = logging.INFO if result["consistent"] else logging.WARNING
        logger.log(level, f"Re-checked {path}: accepted={result['accepted']} consistent={result['consistent']}")
        return result
