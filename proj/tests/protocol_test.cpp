#include <gtest/gtest.h>

#include "slan/protocol.hpp"
#include "support.hpp"

using namespace slan;
using slan::testing::label;

namespace {

CoreFields core(std::initializer_list<Level> mine, Level theirs, Level decision,
                bool hold = false) {
  CoreFields c;
  for (Level l : mine) c.mine = c.mine.with(l);
  c.theirs = theirs;
  c.decision = decision;
  c.hold = hold;
  return c;
}

std::vector<ActionLabel> labels_of(const std::vector<Successor>& succ) {
  std::vector<ActionLabel> out;
  for (const auto& s : succ) out.push_back(s.label);
  return out;
}

}  // namespace

TEST(Labels, RenderAndParse) {
  const std::vector<std::string> texts = {
      "propose(id1,0)", "agreed(id2,1)",  "in_q(id1,inform(0))",
      "out_q(id2,decide(1))", "tau", "delta"};
  for (const auto& t : texts) {
    auto l = parse_label(t);
    ASSERT_TRUE(l) << t;
    EXPECT_EQ(to_string(*l), t);
  }
  EXPECT_FALSE(parse_label("propose(id3,0)"));
  EXPECT_FALSE(parse_label("propose(id1,0"));
  EXPECT_FALSE(parse_label("in_q(id1,hello(0))"));
  EXPECT_FALSE(parse_label("tau "));
}

TEST(Labels, CanonicalOrderFollowsKindThenParty) {
  EXPECT_LT(label("propose(id2,1)"), label("agreed(id1,0)"));
  EXPECT_LT(label("propose(id1,1)"), label("propose(id2,0)"));
  EXPECT_LT(label("agreed(id2,0)"), label("in_q(id1,inform(0))"));
  EXPECT_LT(label("in_q(id1,inform(1))"), label("in_q(id1,decide(0))"));
  EXPECT_LT(label("out_q(id2,decide(1))"), label("tau"));
  for (auto t : {"propose(id1,2)", "out_q(id2,decide(1))", "delta"})
    EXPECT_EQ(ActionLabel::from_code(label(t).code()), label(t));
}

TEST(LevelSetTest, MinOfEmptyIsFallback) {
  LevelSet s;
  EXPECT_EQ(s.min_or(2), 2);
  s = s.with(1).with(0);
  EXPECT_EQ(s.min_or(2), 0);
  EXPECT_TRUE(s.contains(1));
  EXPECT_FALSE(s.contains(2));
}

TEST(InitialState, NoneIsMax) {
  for (unsigned max : {1u, 2u, 5u}) {
    auto s = initial_state(Config::with_max(max));
    for (PartyId p : kParties) {
      const auto& e = s.entity(p);
      EXPECT_TRUE(e.core.mine.empty());
      EXPECT_EQ(e.core.theirs, max);
      EXPECT_EQ(e.core.decision, max);
      EXPECT_FALSE(e.core.hold);
      EXPECT_TRUE(e.idle());
      EXPECT_TRUE(s.channel(p).queue.empty());
    }
  }
}

TEST(ConfigTest, Validation) {
  EXPECT_THROW(Config::with_max(0), Error);
  EXPECT_EQ(Config::with_max(2).queue_cap, 8u);
  Config c = Config::with_max(1);
  c.queue_cap = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Negotiate, FirstProposalInforms) {
  auto cfg = Config::with_max(2);
  auto send = negotiate_on_propose(core({}, 2, 2), 1, cfg);
  ASSERT_TRUE(send);
  EXPECT_EQ(send->message, Message::inform(1));
  EXPECT_EQ(send->next, core({1}, 2, 2));
}

TEST(Negotiate, RepeatedLevelIsIgnored) {
  auto cfg = Config::with_max(2);
  EXPECT_FALSE(negotiate_on_propose(core({1}, 2, 2), 1, cfg));
}

TEST(Negotiate, MatchingPeerLevelDecides) {
  auto cfg = Config::with_max(2);
  auto send = negotiate_on_propose(core({1}, 0, 2), 0, cfg);
  ASSERT_TRUE(send);
  EXPECT_EQ(send->message, Message::decide(0));
  EXPECT_EQ(send->next, core({}, 2, 0, true));
}

TEST(Negotiate, AboveTheirsIsIgnored) {
  auto cfg = Config::with_max(3);
  EXPECT_FALSE(negotiate_on_propose(core({}, 1, 3), 2, cfg));
}

TEST(Receive, HoldSwallowsInform) {
  auto cfg = Config::with_max(2);
  auto c = core({}, 2, 2, true);
  auto r = on_receive(c, Message::inform(0), cfg);
  EXPECT_EQ(r.next, c);
  EXPECT_FALSE(r.reply);
}

TEST(Receive, HoldReleasedByDecide) {
  auto cfg = Config::with_max(2);
  auto r = on_receive(core({}, 2, 2, true), Message::decide(1), cfg);
  EXPECT_EQ(r.next, core({}, 2, 2, false));
  EXPECT_FALSE(r.reply);
}

TEST(Receive, InformOfOwnLevelDecides) {
  auto cfg = Config::with_max(2);
  auto r = on_receive(core({1, 0}, 2, 2), Message::inform(1), cfg);
  ASSERT_TRUE(r.reply);
  EXPECT_EQ(*r.reply, Message::decide(1));
  EXPECT_FALSE(r.reply_is_confirm);
  EXPECT_EQ(r.next, core({}, 2, 1, true));
}

TEST(Receive, OtherInformLowersTheirs) {
  auto cfg = Config::with_max(2);
  auto r = on_receive(core({}, 2, 2), Message::inform(1), cfg);
  EXPECT_FALSE(r.reply);
  EXPECT_EQ(r.next, core({}, 1, 2));
}

TEST(Receive, DecideIsAdoptedAndConfirmed) {
  auto cfg = Config::with_max(2);
  auto r = on_receive(core({1}, 0, 2), Message::decide(1), cfg);
  ASSERT_TRUE(r.reply);
  EXPECT_EQ(*r.reply, Message::decide(1));
  EXPECT_TRUE(r.reply_is_confirm);
  EXPECT_EQ(r.next, core({}, 2, 1, false));
}

TEST(Receive, MutantAdoptsWithoutReply) {
  auto cfg = Config::with_max(2);
  cfg.reply_to_decide = false;
  auto r = on_receive(core({1}, 0, 2), Message::decide(1), cfg);
  EXPECT_FALSE(r.reply);
  EXPECT_EQ(r.next.decision, 1);
}

TEST(Enabled, InitialOffersEveryProposal) {
  auto cfg = Config::with_max(2);
  auto succ = enabled_transitions(initial_state(cfg), cfg);
  std::vector<ActionLabel> expected = {label("propose(id1,0)"),
                                       label("propose(id1,1)"),
                                       label("propose(id2,0)"),
                                       label("propose(id2,1)")};
  EXPECT_EQ(labels_of(succ), expected);
  for (const auto& s : succ) {
    std::vector<ActionLabel> own;
    for (const auto& t : enabled_transitions(s.target, cfg))
      if (t.label.party == s.label.party) own.push_back(t.label);
    ASSERT_EQ(own.size(), 1u);
    EXPECT_EQ(own[0], ActionLabel::in_q(s.label.party, Message::inform(s.label.level)));
  }
}

TEST(Enabled, PendingEntityOnlySends) {
  auto cfg = Config::with_max(2);
  auto s = initial_state(cfg);
  s.e1.core = core({1}, 2, 2);
  s.e1.pending = Pending{Message::inform(1), s.e1.core, false};
  s.ch2.queue.push_back(Message::inform(0));
  auto succ = enabled_transitions(s, cfg);
  std::vector<ActionLabel> mine;
  for (const auto& t : succ)
    if (t.label.party == PartyId::Id1 && t.label.kind != ActionKind::OutQ)
      mine.push_back(t.label);
  ASSERT_EQ(mine.size(), 1u);
  EXPECT_EQ(mine[0], label("in_q(id1,inform(1))"));
  EXPECT_EQ(labels_of(succ).front(), label("in_q(id1,inform(1))"));
  for (const auto& t : succ)
    EXPECT_FALSE(t.label.is(ActionKind::OutQ, PartyId::Id2));
}

TEST(Enabled, DecisionOffersAgreedAndSelfLoops) {
  auto cfg = Config::with_max(1);
  auto s = initial_state(cfg);
  s.e1.core = core({}, 1, 0, true);
  auto succ = enabled_transitions(s, cfg);
  ASSERT_GE(succ.size(), 2u);
  EXPECT_EQ(succ[0].label, label("agreed(id1,0)"));
  EXPECT_EQ(succ[0].target.e1.core.decision, 1);
  EXPECT_TRUE(succ[0].target.e1.core.hold);
  EXPECT_EQ(succ[1].label, label("propose(id1,0)"));
  EXPECT_EQ(succ[1].target, s);
}

TEST(Enabled, ReceiveTakesOldestMessage) {
  auto cfg = Config::with_max(2);
  auto s = initial_state(cfg);
  s.ch1.queue = {Message::inform(1), Message::inform(0)};
  auto succ = enabled_transitions(s, cfg);
  auto it = std::find_if(succ.begin(), succ.end(), [](const Successor& t) {
    return t.label.is(ActionKind::OutQ);
  });
  ASSERT_NE(it, succ.end());
  EXPECT_EQ(it->label, label("out_q(id1,inform(1))"));
  EXPECT_EQ(it->target.ch1.queue, std::vector<Message>{Message::inform(0)});
  EXPECT_EQ(it->target.e2.core.theirs, 1);
}

TEST(Enabled, ConfirmRouting) {
  auto cfg = Config::with_max(2);
  auto s = initial_state(cfg);
  s.ch1.queue = {Message::decide(1)};
  auto after = [&](const Config& c) {
    auto succ = enabled_transitions(s, c);
    auto recv = std::find_if(succ.begin(), succ.end(), [](const Successor& t) {
      return t.label.is(ActionKind::OutQ);
    });
    return enabled_transitions(recv->target, c);
  };
  auto own = after(cfg);
  EXPECT_EQ(std::count_if(own.begin(), own.end(),
                          [](const Successor& t) {
                            return t.label == label("in_q(id2,decide(1))");
                          }),
            1);
  cfg.confirm_channel = ConfirmChannel::LiteralFrom;
  auto literal = after(cfg);
  EXPECT_EQ(std::count_if(literal.begin(), literal.end(),
                          [](const Successor& t) {
                            return t.label == label("in_q(id1,decide(1))");
                          }),
            1);
}

TEST(Enabled, QueueCapIsHardError) {
  auto cfg = Config::with_max(2);
  cfg.queue_cap = 1;
  auto s = initial_state(cfg);
  s.ch1.queue = {Message::inform(1)};
  s.e1.core = core({1, 0}, 2, 2);
  s.e1.pending = Pending{Message::inform(0), s.e1.core, false};
  EXPECT_THROW(enabled_transitions(s, cfg), QueueCapExceeded);
}

TEST(Enabled, PureFunction) {
  auto cfg = Config::with_max(2);
  const auto& ex = slan::testing::explored(2);
  for (std::size_t i = 0; i < ex.states.size(); i += 97)
    EXPECT_EQ(enabled_transitions(ex.states[i], cfg),
              enabled_transitions(ex.states[i], cfg));
}

TEST(Mirror, IsAnInvolution) {
  const auto& ex = slan::testing::explored(1);
  for (const auto& s : ex.states) EXPECT_EQ(mirrored(mirrored(s)), s);
}

TEST(Describe, QueuesNewestFirst) {
  auto cfg = Config::with_max(2);
  auto s = initial_state(cfg);
  s.ch1.queue = {Message::inform(1), Message::inform(0)};
  auto text = describe(s, cfg);
  EXPECT_NE(text.find("queue id1: [inform(0), inform(1)]"), std::string::npos)
      << text;
}
