// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/ideation.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/mock_replies.hpp>

namespace chatbci {

namespace {

struct Idea {
    const char* question;
    const char* gap;
    const char* motivation;
    const char* approach;
};

// Canned ideation deck for the offline provider.
constexpr Idea kIdeas[] = {
    {"What are the optimal EEG frequency bands for decoding, and how do they vary across subjects?",
     "Inconsistent findings on band contributions.", "Personalization can improve performance.",
     "Perform detailed frequency band analysis."},
    {"How can adversarial robustness techniques improve the reliability of EEG classifiers?",
     "Limited research on adversarial robustness in BCIs.", "Reliable BCIs are essential for sensitive domains.",
     "Simulate adversarial attacks and develop defenses."},
    {"Can graph-based representations of EEG signals improve motor imagery classification?",
     "EEG relationships are underutilized in flat feature models.",
     "Graphs can capture spatial-temporal relationships.", "Use GNNs and evaluate performance."},
    {"How can self-supervised learning reduce the need for labeled data in EEG decoding?",
     "Labeled data is scarce and expensive.", "Self-supervised methods can leverage large unlabeled datasets.",
     "Apply techniques like contrastive learning and test results."},
    {"What role does individual variability in brain anatomy play in decoding motor imagery?",
     "EEG decoding often assumes uniformity across individuals.", "Personalized BCIs can improve accuracy.",
     "Analyze variability and develop normalization strategies."},
    {"How can dynamic ensemble methods improve the robustness and accuracy of motor imagery classification?",
     "Static ensembles do not adapt to data properties.", "Dynamic ensembles can tailor predictions to the data.",
     "Develop adaptive ensemble methods and test performance."},
    {"What is the impact of session-to-session variability, and how can it be mitigated?",
     "Session variability affects model performance.", "Reliable BCIs need to function consistently over time.",
     "Apply adaptation techniques and evaluate performance improvements."},
    {"Can federated learning improve decoding while preserving privacy?",
     "Most approaches require centralized data.", "Privacy-preserving training can enable collaborative BCIs.",
     "Implement federated learning frameworks and test cross-subject models."},
    {"How can cross-frequency coupling (CFC) features improve decoding accuracy?",
     "CFC is underexplored in motor imagery.", "CFC can reveal richer brain dynamics.",
     "Extract CFC features and integrate into models."},
    {"What are the effects of different EEG preprocessing pipelines on decoding performance?",
     "No consensus on the best preprocessing pipeline.", "Standardization can improve reproducibility.",
     "Compare pipelines and evaluate their effects."},
    {"Can few-shot learning enable accurate decoding with minimal training data?",
     "Most models require substantial data, impractical for new users.",
     "Few-shot learning reduces the burden of data collection.",
     "Implement few-shot methods like prototypical networks."},
    {"How can real-time feedback loops improve motor imagery classification during online experiments?",
     "Feedback is minimally studied in offline datasets.",
     "Real-time feedback could help users refine mental strategies.",
     "Simulate real-time feedback and test its impact on decoding."},
};

constexpr const char* kInterpretation =
    "Interpretation of the ERP figure:\n"
    "1. Cue-evoked potentials. Fz, Cz and Pz show a negative then positive deflection about 100-300 ms after "
    "cue onset in every class. It reflects processing of the cue, not the imagined movement.\n"
    "2. Ocular activity. EOG1 and EOG3 separate by class shortly after the cue, with opposite signs for left and "
    "right arrows. This fits a saccade toward the arrow tip and carries class information of non-cortical "
    "origin.\n"
    "3. Motor imagery. Class differences over C3 and C4 are small in the time domain; mu and beta band power is "
    "the better place to look.\n"
    "Suggested next step: compare decoding with and without EOG channels and inspect the early post-cue window "
    "after a 4 Hz high-pass.";

} // namespace

std::string canned_idea_reply(std::size_t n)
{
    std::string out;
    const auto count = std::min<std::size_t>(n, std::size(kIdeas));
    for (std::size_t i = 0; i < count; ++i) {
        if (i)
            out += "\n";
        out += "Idea " + std::to_string(i + 1) + "\n";
        out += std::string("Question: ") + kIdeas[i].question + "\n";
        out += std::string("Gap: ") + kIdeas[i].gap + "\n";
        out += std::string("Motivation: ") + kIdeas[i].motivation + "\n";
        out += std::string("Approach: ") + kIdeas[i].approach + "\n";
    }
    return out;
}

const std::vector<ScriptStep>& scripted_session()
{
    static const std::vector<ScriptStep> steps{
        {ResearchPhase::execution, "Validate the training session of subject A01.",
         "I will check the container integrity, NaN counts, flat segments and class balance of A01 (train).\n"
         "ACTION {\"kind\":\"analysis\",\"payload\":{\"op\":\"validate\",\"subject\":\"A01\",\"session\":\"train\"}}",
         true},
        {ResearchPhase::execution,
         "Compute class-wise ERPs for subject A01 with common average reference and a 40 Hz low-pass.",
         "Epoching A01 (train) from 2 s before to 2 s after each cue, re-referenced to the common average and "
         "low-pass filtered at 40 Hz.\n"
         "ACTION {\"kind\":\"analysis\",\"payload\":{\"op\":\"erp\",\"subject\":\"A01\",\"session\":\"train\","
         "\"car\":true,\"filters\":[\"lp:40\"],\"window_s\":[-2,2]}}",
         true},
        {ResearchPhase::visualization, "Plot the ERP result as a figure.",
         "Rendering the ERP grid for Fz, C3, Cz, C4, Pz, EOG1 and EOG3 with the fixation and cue periods marked.\n"
         "ACTION {\"kind\":\"figure\",\"payload\":{\"type\":\"erp\",\"erp_result_id\":\"latest\"}}",
         true},
        {ResearchPhase::execution, "Train the tiny decoder on subject A01.",
         "Starting a within-subject run on A01 with the tiny decoder preset.\n"
         "ACTION {\"kind\":\"training_run\",\"payload\":{\"subject\":\"A01\",\"preset\":\"tiny\","
         "\"max_epochs\":3}}",
         false},
        {ResearchPhase::interpretation, "Interpret the ERP figure.", kInterpretation, false},
    };
    return steps;
}

MockProvider MockProvider::with_defaults()
{
    MockProvider p;
    for (std::size_t n = 1; n <= std::size(kIdeas); ++n)
        p.add(ideation_prompt(n, default_ideation_topic()), canned_idea_reply(n));
    for (const auto& step : scripted_session())
        p.add(step.prompt, step.reply);
    return p;
}

} // namespace chatbci
