#include "cshield/errors.hpp"
#include "cshield/model_format.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace cshield;

namespace {

ParseResult parse(const std::string& text)
{
    return parse_model({text, "test.pm"});
}

bool mentions(const ParseResult& r, const std::string& needle)
{
    return r.report().find(needle) != std::string::npos;
}

const char* grid_model = R"(
mdp
const int XMAX = 4;
const double p = 0.8;
formula right_edge = x=XMAX;
module grid
  x : [0..XMAX] init 0;
  y : [0..2] init 0;
  [east] !right_edge -> p:(x'=x+1) + 1-p:(x'=x);
  [east] right_edge -> (x'=0);
  [north] y<2 -> p:(y'=y+1) + 1-p:(y'=y);
  [north] y=2 -> true;
  [south] y>0 -> (y'=y-1);
  [south] y=0 -> 0.5:(y'=1) + 0.5:(y'=y);
endmodule
label "corner" = x=XMAX & y=2;
label "origin" = x=0 & y=0;
)";

} // namespace

TEST(ParseModel, TwoVariableGrid)
{
    const auto r = parse(grid_model);
    ASSERT_TRUE(r.ok()) << r.report();
    const auto& m = *r.model;
    EXPECT_EQ(m.state_count(), 15u);
    EXPECT_EQ(m.action_count(), 3u);
    EXPECT_EQ(m.action_names(), (std::vector<std::string>{"east", "north", "south"}));
    // Lexicographic order of (x, y): state 3*x + y.
    EXPECT_EQ(m.initial(), 0u);
    EXPECT_EQ(m.label("corner"), StateSet{14});
    EXPECT_EQ(m.label("origin"), StateSet{0});
    const Choice* east = m.find_choice(0, 0);
    ASSERT_NE(east, nullptr);
    ASSERT_EQ(east->successors.size(), 2u);
    EXPECT_EQ(east->successors[0].target, 0u);
    EXPECT_NEAR(east->successors[0].probability, 0.2, 1e-15);
    EXPECT_EQ(east->successors[1].target, 3u);
    EXPECT_TRUE(validate(m).empty());
}

TEST(ParseModel, SingleStateIdentity)
{
    const auto r = parse("mdp\nmodule one\n  x : [0..0] init 0;\n  [stay] true -> 1:(x'=x);\nendmodule\n");
    ASSERT_TRUE(r.ok()) << r.report();
    EXPECT_EQ(r.model->state_count(), 1u);
    EXPECT_EQ(r.model->action_count(), 1u);
    EXPECT_TRUE(r.model->is_absorbing(0));
}

TEST(ParseModel, ProbabilitiesMustSumToOne)
{
    const auto r = parse("mdp\nmodule m\n  x : [0..1] init 0;\n  [a] x=0 -> 0.6:(x'=1) + 0.3:(x'=0);\n"
                         "  [a] x=1 -> true;\nendmodule\n");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r, "probabilities sum to 0.9")) << r.report();
}

TEST(ParseModel, DiagnosticsCarryPositions)
{
    const auto r = parse("mdp\nmodule m\n  x : [0..1] init 0;\n  [a] x=0 -> (x'=y);\nendmodule\n");
    EXPECT_FALSE(r.ok());
    ASSERT_FALSE(r.diagnostics.empty());
    EXPECT_EQ(r.diagnostics[0].line, 4u);
    EXPECT_GT(r.diagnostics[0].column, 0u);
    EXPECT_TRUE(mentions(r, "undefined identifier 'y'")) << r.report();
}

TEST(ParseModel, UnsupportedConstructsAreNamed)
{
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"dtmc\nmodule m\n x : [0..1] init 0;\n [a] true -> true;\nendmodule\n", "model type 'dtmc'"},
        {"mdp\nmodule m\n b : bool init false;\n [a] true -> true;\nendmodule\n", "boolean variables"},
        {"mdp\nmodule m\n x : [0..1] init 0;\n [] true -> true;\nendmodule\n", "unlabeled command"},
        {"mdp\nmodule m\n x : [0..4] init 0;\n [a] x<4 -> (x'=x/2);\n [a] x=4 -> true;\nendmodule\n", "division"},
        {"mdp\nmodule m\n x : [0..1] init 0;\n [a] true -> true;\nendmodule\nrewards \"r\"\n true : 1;\nendrewards\n",
         "reward structures"},
        {"mdp\nmodule m\n x : [0..1] init 0;\n [a] true -> true;\nendmodule\nmodule n = m [x=y] endmodule\n",
         "multiple modules"},
        {"mdp\n/* note */\nmodule m\n x : [0..1] init 0;\n [a] true -> true;\nendmodule\n", "block comments"},
        {"mdp\nmodule m\n x : [0..1] init 0;\n [a] (x=0 => x=1) -> true;\nendmodule\n", "operator '=>'"},
        {"mdp\nmodule m\n x : [0..1] init 0;\n [a] true -> (x'=x=0 ? 1 : 0);\nendmodule\n", "conditional"},
        {"mdp\nmodule m\n x : [0..3] init 0;\n [a] true -> (x'=min(x, 1, 2));\nendmodule\n", "more than two"},
        {"mdp\nconst int N;\nmodule m\n x : [0..1] init 0;\n [a] true -> true;\nendmodule\n", "undefined constant"},
    };
    for (const auto& [text, needle] : cases) {
        const auto r = parse(text);
        EXPECT_FALSE(r.ok()) << text;
        EXPECT_TRUE(mentions(r, "unsupported construct")) << r.report();
        EXPECT_TRUE(mentions(r, needle)) << needle << " vs " << r.report();
    }
}

TEST(ParseModel, SameActionTwiceInOneState)
{
    const auto r = parse("mdp\nmodule m\n x : [0..1] init 0;\n [a] x=0 -> (x'=1);\n [a] x>=0 -> (x'=0);\n"
                         "endmodule\n");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r, "both enabled")) << r.report();
}

TEST(ParseModel, OutOfRangeUpdate)
{
    const auto r = parse("mdp\nmodule m\n x : [0..2] init 0;\n [a] true -> (x'=x+1);\nendmodule\n");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r, "out-of-range update x'=3 outside [0..2]")) << r.report();
}

TEST(ParseModel, StateDependentProbabilityFolds)
{
    const auto r = parse("mdp\nconst double q = 0.25;\nmodule m\n x : [0..2] init 0;\n"
                         " [a] x<2 -> q*(x+1):(x'=x+1) + 1-q*(x+1):(x'=x);\n [a] x=2 -> true;\nendmodule\n");
    ASSERT_TRUE(r.ok()) << r.report();
    EXPECT_NEAR(r.model->find_choice(1, 0)->successors[1].probability, 0.5, 1e-15);
}

TEST(ParseModel, EmptyLabelWarning)
{
    const auto r = parse("mdp\nmodule m\n x : [0..1] init 0;\n [a] true -> (x'=1-x);\nendmodule\n"
                         "label \"never\" = x>5;\n");
    ASSERT_TRUE(r.ok()) << r.report();
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].severity, Diagnostic::Severity::warning);
    EXPECT_TRUE(mentions(r, "empty label \"never\""));
}

TEST(ParseModel, DeadlockGetsSelfLoop)
{
    const auto r = parse("mdp\nmodule m\n x : [0..1] init 0;\n [go] x=0 -> (x'=1);\nendmodule\n");
    ASSERT_TRUE(r.ok()) << r.report();
    EXPECT_TRUE(r.model->is_absorbing(1));
}

TEST(ParseModel, ScaleLimit)
{
    const auto r = parse("mdp\nmodule m\n x : [0..1000] init 0;\n y : [0..1000] init 0;\n"
                         " [a] x<1000 -> 0.5:(x'=x+1) + 0.5:(y'=min(y+1, 1000));\n"
                         " [a] x=1000 -> (y'=min(y+1, 1000));\nendmodule\n");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(r.scale_limit_exceeded);
}

TEST(ParseModel, Deterministic)
{
    const auto a = parse(grid_model);
    const auto b = parse(grid_model);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_EQ(emit_model(*a.model), emit_model(*b.model));
}

TEST(CaseStudyModel, FifteenStatesThreeActions)
{
    const auto m = load_model(CSHIELD_MODELS_DIR "/taxi.pm");
    EXPECT_EQ(m.state_count(), 16u);
    EXPECT_EQ(m.label("fail").count(), 1u);
    EXPECT_EQ(m.action_count(), 3u);
    EXPECT_TRUE(validate(m).empty());
}

TEST(EmitModel, IdentityRoundTripIsExact)
{
    ExplicitMdp m(1, {"stay"}, 0);
    m.set_choice(0, 0, {{0, 1.0}});
    const auto r = parse(emit_model(m));
    ASSERT_TRUE(r.ok()) << r.report();
    EXPECT_EQ(emit_model(*r.model), emit_model(m));
    EXPECT_EQ(r.model->state_count(), 1u);
    EXPECT_TRUE(r.model->is_absorbing(0));
}

TEST(EmitModel, RoundTripPreservesStructure)
{
    const auto m = load_model(CSHIELD_MODELS_DIR "/taxi.pm");
    const auto r = parse(emit_model(m, {"header line"}));
    ASSERT_TRUE(r.ok()) << r.report();
    const auto& e = *r.model;
    ASSERT_EQ(e.state_count(), m.state_count());
    EXPECT_EQ(e.action_names(), m.action_names());
    EXPECT_EQ(e.initial(), m.initial());
    EXPECT_EQ(e.labels(), m.labels());
    for (StateId s = 0; s < m.state_count(); ++s) {
        ASSERT_EQ(e.choices(s).size(), m.choices(s).size());
        for (std::size_t i = 0; i < m.choices(s).size(); ++i) {
            const auto& a = m.choices(s)[i];
            const auto& b = e.choices(s)[i];
            EXPECT_EQ(a.action, b.action);
            ASSERT_EQ(a.successors.size(), b.successors.size());
            for (std::size_t j = 0; j < a.successors.size(); ++j) {
                EXPECT_EQ(a.successors[j].target, b.successors[j].target);
                EXPECT_EQ(a.successors[j].probability, b.successors[j].probability);
            }
        }
    }
}

TEST(EmitModel, RejectsNonIdentifierActions)
{
    ExplicitMdp m(1, {"not an id"}, 0);
    m.set_choice(0, 0, {{0, 1.0}});
    EXPECT_THROW((void)emit_model(m), InputError);
}
