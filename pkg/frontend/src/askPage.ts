/** Ask page state: single-line question submit, answer sidebar data, and the
 * three-option 1-click feedback widget.
 */

import { ApiError, AskResponse, Rating } from "./api.js";

/** The slice of the API the ask page needs. */
export interface AskApi {
  ask(text: string, locale?: string): Promise<AskResponse>;
  feedback(requestId: string, rating: Rating): Promise<{ ok: boolean; orphan: boolean }>;
}

export type FeedbackState = "idle" | "sending" | "sent";

interface RejectionDetail {
  outcome?: string;
  categories?: string[];
}

export class AskPage {
  response: AskResponse | null = null;
  notice: string | null = null;
  feedbackState: FeedbackState = "idle";
  sentRating: Rating | null = null;
  submitting = false;
  onChange: () => void = () => {};

  constructor(private api: AskApi) {}

  async submit(text: string): Promise<void> {
    if (!text.trim() || this.submitting) return;
    this.submitting = true;
    this.response = null;
    this.notice = null;
    this.feedbackState = "idle";
    this.sentRating = null;
    this.onChange();
    try {
      this.response = await this.api.ask(text);
      if (this.response.outcome === "error") {
        this.notice = "Something went wrong answering that; try rephrasing.";
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        const detail = (err.detail ?? {}) as RejectionDetail;
        const categories = detail.categories?.join(", ") || "policy";
        this.notice = `That input was rejected (${categories}).`;
      } else {
        this.notice = "The service is unavailable right now.";
      }
    } finally {
      this.submitting = false;
      this.onChange();
    }
  }

  get showSidebar(): boolean {
    return this.response != null && this.response.answer_html != null;
  }

  /** Exactly one POST per answered question; repeat clicks are no-ops. */
  async clickFeedback(rating: Rating): Promise<void> {
    if (this.feedbackState !== "idle" || !this.response) return;
    this.feedbackState = "sending";
    this.onChange();
    try {
      await this.api.feedback(this.response.request_id, rating);
      this.sentRating = rating;
    } catch {
      this.sentRating = rating; // widget still disables; losing a retry beats double-sending
    } finally {
      this.feedbackState = "sent";
      this.onChange();
    }
  }

  get feedbackDisabled(): boolean {
    return this.feedbackState !== "idle";
  }
}
