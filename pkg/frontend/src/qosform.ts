/**
 * Client-side QoS form checks. These guard obviously bad submissions; the
 * broker remains the authority on feasibility. The future-deadline check is
 * a plain string comparison against the displayed session clock: both sides
 * are local ISO strings in the session's fixed offset, so lexicographic
 * order is chronological order and no time arithmetic happens here.
 */

export interface QosFormErrors {
  budget?: string;
  deadline?: string;
}

const NAIVE_MINUTES = /^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}$/;
const NAIVE_SECONDS = /^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}$/;
const NAIVE_FRACTION = /^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{1,3}$/;
const OFFSET_SUFFIX = /^[+-]\d{2}:\d{2}$/;
const BUDGET = /^\d+(\.\d{1,2})?$/;

/**
 * Normalize form text to a 19-char naive local timestamp. Accepts the
 * datetime-local control's minute, second or millisecond precision, or a
 * pasted localized string whose offset tail is simply dropped. Fractional
 * seconds are truncated; the deadline is stored at second precision.
 */
export function normalizeLocalInput(text: string): string | null {
  const t = text.trim();
  if (NAIVE_MINUTES.test(t)) return t + ":00";
  if (NAIVE_SECONDS.test(t)) return t;
  if (NAIVE_FRACTION.test(t)) return t.slice(0, 19);
  if (t.length > 19 && NAIVE_SECONDS.test(t.slice(0, 19)) && OFFSET_SUFFIX.test(t.slice(19))) {
    return t.slice(0, 19);
  }
  return null;
}

export function validateQosForm(
  budget: string,
  deadline: string,
  clockLocal: string | null,
): QosFormErrors {
  const errors: QosFormErrors = {};

  if (!BUDGET.test(budget.trim())) {
    errors.budget = "budget must be a non-negative amount like 350.00";
  }

  const naive = normalizeLocalInput(deadline);
  if (naive === null) {
    errors.deadline = "deadline must be a local timestamp like 2002-11-18T11:05:00";
  } else if (clockLocal !== null && naive <= clockLocal.slice(0, 19)) {
    errors.deadline = `deadline must be after the session clock ${clockLocal}`;
  }

  return errors;
}

/** Re-attach the session clock's offset tail so the wire string is unambiguous. */
export function withSessionOffset(naive: string, clockLocal: string | null): string {
  if (clockLocal !== null && OFFSET_SUFFIX.test(clockLocal.slice(19))) {
    return naive + clockLocal.slice(19);
  }
  return naive;
}
