from .election import ElectionResult, Faults, VoterReport, audit_disclosures, run_election
from .tallier import Tallier, reshare_to_threshold, select_top_k
from .validation import Verdict, validate_ballots
from .voter import Confirmation, Receipt, voter_submit

__all__ = [
    "Confirmation", "ElectionResult", "Faults", "Receipt", "Tallier", "Verdict", "VoterReport",
    "audit_disclosures", "reshare_to_threshold", "run_election", "select_top_k",
    "validate_ballots", "voter_submit",
]
